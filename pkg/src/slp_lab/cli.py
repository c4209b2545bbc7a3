"""Command-line entry point ``slp-lab``.

Exit status: 0 success, 1 numerical failure, 2 configuration or parse error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as A
from .config import ConfigError, ParameterSet, load_params
from .dynamics import Grid, NumericalError
from .geometry import BeamFrequencies, NoSolutionError, mirror_solution, phase_match
from .params import CavityAnalogyParams, DomainError
from .scenarios import SCENARIOS, load_scenario, run_sweep, run_timeline
from .sequence import SequenceError, compile_timeline, format_timeline, load_timeline
from .units import UnitError, parse_quantity

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2
OUT_ENV = "SLP_LAB_OUT"
CSV_EVERY = 10  # trace samples per CSV row


class UsageError(Exception):
    pass


def _quantity(dimension):
    def parse(text):
        try:
            return parse_quantity(text, dimension)
        except UnitError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _write(path: Path, data) -> None:
    """Write atomically so a failed run never leaves half a file behind."""
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        tmp.write_text(data, encoding="utf-8")
    else:
        tmp.write_bytes(data)
    os.replace(tmp, path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- phase-match


def cmd_phase_match(args) -> int:
    params = load_params(args.params)
    freqs = BeamFrequencies.from_constants(params.constants, params.controls.delta)
    tilt = params.bwc_tilt if args.bwc_tilt is None else args.bwc_tilt
    sol = phase_match(freqs, params.constants.c0, params.ensemble.length, args.azimuth, tilt)
    rows = [("primary", sol)]
    if args.mirror:
        rows.append(("mirror", mirror_solution(sol)))
    if args.json:
        sys.stdout.write(_dumps({name: s.as_dict() for name, s in rows}))
        return EXIT_OK
    print(f"{'solution':<10}{'angle_deg':>12}{'azimuth_deg':>13}{'delta_k_1/m':>15}{'delta_k_L':>13}")
    for name, s in rows:
        print(f"{name:<10}{s.angle_deg:>12.5f}{math.degrees(s.azimuth):>13.3f}{s.delta_k:>15.6g}{s.delta_k_L:>13.6g}")
    return EXIT_OK


# ---------------------------------------------------------------- cavity


def cmd_cavity(args) -> int:
    params = load_params(args.params)
    tau_g = params.tau_g_ref if args.tau_g is None else args.tau_g
    report = A.summarize(
        None, params.constants, params.cavity, params.ensemble.gamma_e, params.ensemble.od,
        params.ensemble.length, tau_g, tau=args.tau,
    )
    sys.stdout.write(A.report_json(report) if args.json else A.format_report(report))
    return EXIT_OK


# ---------------------------------------------------------------- run


def _traces_list(traces):
    out = []
    for ch in sorted(traces.channels):
        c = traces[ch]
        for end, y in (("in", c.inp), ("fwd", c.fwd), ("bwd", c.bwd)):
            out.append(A.Trace(traces.t, y, ch, end))
    return out


def _sidecar(params: ParameterSet, grid: Grid, result, method: str) -> dict:
    traces = result.traces
    ledger = {
        ch: {k: v[::CSV_EVERY] for k, v in traces[ch].ledger.items()} for ch in sorted(traces.channels)
    }
    return {
        "parameters": params,
        "grid": grid,
        "method": method,
        "sequence": format_timeline(result.timeline),
        "ledger_t_us": traces.t[::CSV_EVERY] * 1e6,
        "ledger": ledger,
    }


def _outputs(out: Path, stem: str, params, grid, result, method, plots: bool):
    from .plotting import plot_waveforms

    _write(out / f"{stem}.csv", A.write_traces_csv(_traces_list(result.traces), CSV_EVERY))
    _write(out / f"{stem}.json", _dumps(_sidecar(params, grid, result, method)))
    if plots:
        compiled = compile_timeline(result.timeline, params.controls)
        plot_waveforms(result.traces, out / f"{stem}_waveforms.png", stem, compiled)


def _grid(args, params: ParameterSet, duration: float) -> Grid:
    return Grid(n_z=args.grid_nz, length=params.ensemble.length, dt=args.grid_dt, t_end=duration)


def cmd_run(args) -> int:
    params = load_params(args.params)
    if args.sequence:
        timeline = load_timeline(args.sequence)
        name = Path(args.sequence).stem
    else:
        timeline = load_scenario(args.scenario)
        name = args.scenario
    if timeline.duration <= 0:
        raise UsageError("sequence has zero duration")
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(args, params, timeline.duration)
    plots = not args.no_plots

    report = {"scenario": name, "method": args.method, "grid": {"n_z": grid.n_z, "dt_s": grid.dt}}
    if timeline.sweep is not None:
        sweep = run_sweep(params, timeline, grid, args.method, name)
        members = []
        for trap, res in sweep.members:
            stem = f"{name}_trap{trap * 1e6:.2f}us"
            _outputs(out, stem, params, grid, res, args.method, plots)
            members.append({"trap_time_s": trap, "channels": res.metrics})
        report["members"] = members
        report["fits"] = {ch: None if f is None else {"amplitude": f.amplitude, "tau_s": f.tau, "residual": f.residual}
                          for ch, f in sweep.fits.items()}
        taus = [f.tau for f in sweep.fits.values() if f is not None]
        if taus:
            tau = float(np.mean(taus))
            report["cavity"] = A.summarize(
                None, params.constants, params.cavity, params.ensemble.gamma_e, params.ensemble.od,
                params.ensemble.length, params.tau_g_ref, tau=tau,
            )
        if plots:
            from .plotting import plot_decay

            release = {ch: sweep.release(ch) for ch in params.channels}
            plot_decay(sweep.trap_times, release, sweep.fits, out / f"{name}_decay.png")
    else:
        res = run_timeline(params, timeline, grid, args.method, name)
        _outputs(out, name, params, grid, res, args.method, plots)
        report["channels"] = res.metrics
    text = _dumps(report)
    _write(out / f"{name}_report.json", text)
    if args.json:
        sys.stdout.write(text)
    else:
        _print_summary(report)
    return EXIT_OK


def _fmt(v):
    if v is None:
        return "-"
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _print_summary(report: dict) -> None:
    keys = ("retrieval_efficiency", "group_delay", "transmission", "release_efficiency",
            "trapped_to_release_ratio", "release_peak_lag", "ledger_residual_max")
    blocks = [(None, report["channels"])] if "channels" in report else [
        (m["trap_time_s"], m["channels"]) for m in report["members"]]
    print(f"scenario {report['scenario']}")
    for trap, chans in blocks:
        if trap is not None:
            print(f"trap {trap * 1e6:.2f} us")
        for ch, m in sorted(chans.items()):
            parts = [f"{k}={_fmt(m[k])}" for k in keys if k in m]
            print(f"  ch{ch} " + " ".join(parts))
    for ch, f in sorted(report.get("fits", {}).items()):
        print(f"fit ch{ch}: " + ("-" if f is None else f"tau={f['tau_s'] * 1e6:.4g} us A={f['amplitude']:.4g}"))
    if "cavity" in report:
        print(A.format_report(report["cavity"]), end="")


# ---------------------------------------------------------------- misc


def cmd_scenarios(args) -> int:
    for name, (filename, text) in SCENARIOS.items():
        print(f"{name:<12} {filename:<16} {text}")
    return EXIT_OK


def cmd_format(args) -> int:
    sys.stdout.write(format_timeline(load_timeline(args.file)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slp-lab", description="Stationary light pulse simulation lab.")
    sub = ap.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("phase-match", help="solve the probe injection angle")
    pm.add_argument("--params", help="parameter file (default: shipped paper set)")
    pm.add_argument("--mirror", action="store_true", help="also print the mirror solution")
    pm.add_argument("--azimuth", type=_quantity("angle"), default=0.0, help="azimuth on the solution cone")
    pm.add_argument("--bwc-tilt", type=_quantity("angle"), default=None, help="BWC misalignment")
    pm.add_argument("--json", action="store_true")
    pm.set_defaults(func=cmd_phase_match)

    rn = sub.add_parser("run", help="simulate a scenario or sequence file")
    src = rn.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=sorted(SCENARIOS))
    src.add_argument("--sequence", help=".seq file")
    rn.add_argument("--params", help="parameter file (default: shipped paper set)")
    rn.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or .)")
    rn.add_argument("--grid.nz", dest="grid_nz", type=int, default=256)
    rn.add_argument("--grid.dt", dest="grid_dt", type=_quantity("time"), default=1e-9)
    rn.add_argument("--method", choices=("adiabatic", "full"), default="adiabatic")
    rn.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    rn.add_argument("--json", action="store_true", help="print the report as JSON")
    rn.set_defaults(func=cmd_run)

    cv = sub.add_parser("cavity", help="Q-factor and cooperativity from a decay time")
    cv.add_argument("--tau", type=_quantity("time"), default=1.22e-6)
    cv.add_argument("--tau-g", type=_quantity("time"), default=None, help="slow-light delay for the inference")
    cv.add_argument("--params")
    cv.add_argument("--json", action="store_true")
    cv.set_defaults(func=cmd_cavity)

    ls = sub.add_parser("scenarios", help="list built-in scenarios")
    ls.set_defaults(func=cmd_scenarios)

    fm = sub.add_parser("format", help="parse a .seq file and print its normalised form")
    fm.add_argument("file")
    fm.set_defaults(func=cmd_format)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"slp-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, SequenceError, UnitError, DomainError, NoSolutionError, UsageError,
            OSError, ValueError) as exc:
        print(f"slp-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
