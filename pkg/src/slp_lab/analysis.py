"""Observables extracted from detector traces: energies, efficiencies, delays, decay fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import params as P

__all__ = [
    "AnalysisError",
    "AmbiguousPeakError",
    "Trace",
    "DecayFit",
    "pulse_energy",
    "efficiency",
    "peak_time",
    "group_delay",
    "fit_exponential",
    "summarize",
    "report_json",
    "format_report",
    "write_traces_csv",
    "read_traces_csv",
]

ENDS = ("fwd", "bwd", "in")


class AnalysisError(ValueError):
    pass


class AmbiguousPeakError(AnalysisError):
    pass


@dataclass(frozen=True)
class Trace:
    t: np.ndarray
    intensity: np.ndarray
    channel: int = 1
    end: str = "fwd"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.intensity, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise AnalysisError("t and intensity must be 1-D arrays of equal length")
        if t.size and np.any(np.diff(t) <= 0):
            raise AnalysisError("t must be strictly increasing")
        if np.any(y < 0):
            raise AnalysisError("intensity must be non-negative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "intensity", y)

    def shifted(self, dt: float) -> "Trace":
        return Trace(self.t + dt, self.intensity, self.channel, self.end)

    def window(self, t0: float, t1: float) -> "Trace":
        sel = (self.t >= t0) & (self.t <= t1)
        return Trace(self.t[sel], self.intensity[sel], self.channel, self.end)


@dataclass(frozen=True)
class DecayFit:
    amplitude: float
    tau: float
    residual: float

    def __post_init__(self):
        if not self.tau > 0:
            raise AnalysisError(f"non-positive decay time {self.tau}")

    def __call__(self, t):
        return self.amplitude * np.exp(-np.asarray(t) / self.tau)


def pulse_energy(trace: Trace, window: tuple[float, float] | None = None) -> float:
    """Integral of the piecewise-linear intensity over ``window`` (default: whole trace)."""
    t, y = trace.t, trace.intensity
    if t.size < 2:
        return 0.0
    t0, t1 = (t[0], t[-1]) if window is None else window
    if t1 < t0:
        raise AnalysisError(f"inverted window ({t0}, {t1})")
    if t0 < t[0] - 1e-15 or t1 > t[-1] + 1e-15:
        raise AnalysisError("window extends beyond the trace")
    t0, t1 = max(t0, t[0]), min(t1, t[-1])
    inner = (t > t0) & (t < t1)
    tt = np.concatenate(([t0], t[inner], [t1]))
    yy = np.interp(tt, t, y)
    return float(np.trapezoid(yy, tt))


def efficiency(
    out: Trace,
    ref_input: Trace,
    window: tuple[float, float] | None = None,
    ref_window: tuple[float, float] | None = None,
) -> float:
    """Energy of ``out`` in ``window`` relative to the energy of the input pulse."""
    ref = pulse_energy(ref_input, ref_window)
    if ref <= 0:
        raise AnalysisError("reference input carries no energy")
    return pulse_energy(out, window) / ref


def peak_time(trace: Trace, dominance: float = 0.9) -> float:
    """Sub-sample peak location by 3-point quadratic interpolation.

    Raises :class:`AmbiguousPeakError` for flat traces, plateaus at the
    maximum, or when a second local maximum separated by a dip below half
    the peak reaches ``dominance`` times the peak height.
    """
    t, y = trace.t, trace.intensity
    if y.size < 3 or not np.max(y) > 0:
        raise AmbiguousPeakError("trace has no peak")
    i = int(np.argmax(y))
    peak = y[i]
    if np.count_nonzero(y == peak) > 1:
        raise AmbiguousPeakError("flat maximum")
    # look for a competing maximum beyond a dip below half height
    half = 0.5 * peak
    for side in (y[i + 1:], y[:i][::-1]):
        below = np.nonzero(side < half)[0]
        if below.size and side[below[0]:].size and side[below[0]:].max() >= dominance * peak:
            raise AmbiguousPeakError("several comparable peaks")
    if i == 0 or i == y.size - 1:
        return float(t[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
    b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom
    if a >= 0:
        return float(t1)
    return float(-b / (2 * a))


def group_delay(out: Trace, in_ref: Trace, storage_time: float = 0.0) -> float:
    """Peak-to-peak delay minus the time spent in storage."""
    return peak_time(out) - peak_time(in_ref) - storage_time


def fit_exponential(t_trap, eta) -> DecayFit:
    """Log-linear least squares of ``log(eta) = log(A) - t / tau``."""
    t = np.asarray(t_trap, dtype=float)
    e = np.asarray(eta, dtype=float)
    if t.size != e.size or t.size < 3:
        raise AnalysisError("need at least three (t, eta) points")
    if np.any(e <= 0):
        raise AnalysisError("efficiencies must be positive for a log-domain fit")
    if np.ptp(t) == 0:
        raise AnalysisError("degenerate fit: all trapping times equal")
    y = np.log(e)
    tc = t - t.mean()
    slope = float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
    intercept = float(y.mean() - slope * t.mean())
    if slope >= 0:
        raise AnalysisError("efficiencies do not decay")
    resid = y - (intercept + slope * t)
    return DecayFit(math.exp(intercept), -1.0 / slope, float(np.sqrt(np.mean(resid**2))))


def summarize(
    fit: DecayFit | None,
    constants: P.PhysicalConstants,
    cavity: P.CavityAnalogyParams,
    gamma_e: float,
    od: float,
    length: float,
    tau_g: float,
    tau: float | None = None,
) -> dict:
    """Cavity-analogy summary: decay time, Q-factor and the cooperativity estimate.

    The cooperativity follows the inference chain delay -> Rabi frequency ->
    g^2 N -> C_N, all in the full-Rabi convention of those formulas.
    """
    if tau is None:
        if fit is None:
            raise AnalysisError("need a fit or an explicit tau")
        tau = fit.tau
    f0 = constants.f0
    omega = P.infer_rabi_from_delay(od, gamma_e, tau_g)
    g_n = P.infer_gn_from_vg(tau_g, length, omega, constants.c0)
    n_atoms = g_n / cavity.g_single**2 if cavity.g_single > 0 else math.inf
    report = {
        "tau_s": tau,
        "f0_hz": f0,
        "q_factor": P.q_factor(f0, tau),
        "omega_fwc_full_rad_s": omega,
        "g2n_full_rad2_s2": g_n,
        "n_atoms": n_atoms,
        "cooperativity": P.cooperativity(cavity.g_single, n_atoms, cavity.kappa, gamma_e),
        "single_atom_cooperativity": P.cooperativity(cavity.g_single, 1.0, cavity.kappa, gamma_e),
    }
    if fit is not None:
        report["fit_amplitude"] = fit.amplitude
        report["fit_residual"] = fit.residual
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def format_report(report: dict) -> str:
    width = max(len(k) for k in report) if report else 0
    lines = []
    for key, value in report.items():
        if isinstance(value, float):
            text = f"{value:.6g}"
        elif isinstance(value, dict):
            text = json.dumps(value, sort_keys=True)
        else:
            text = str(value)
        lines.append(f"{key:<{width}}  {text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- trace files


def write_traces_csv(traces: list[Trace], every: int = 1) -> str:
    """CSV with header ``t_us,ch,end,intensity``; intensity in photons per microsecond."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_us", "ch", "end", "intensity"])
    for tr in traces:
        for t, y in zip(tr.t[::every], tr.intensity[::every]):
            w.writerow([repr(float(t * 1e6)), tr.channel, tr.end, repr(float(y * 1e-6))])
    return buf.getvalue()


def read_traces_csv(text: str) -> list[Trace]:
    rows: dict[tuple[int, str], tuple[list, list]] = {}
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t_us", "ch", "end", "intensity"]:
        raise AnalysisError("expected header t_us,ch,end,intensity")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            t, ch, end, y = float(row[0]), int(row[1]), row[2].strip(), float(row[3])
        except (ValueError, IndexError):
            raise AnalysisError(f"line {lineno}: malformed row {row!r}") from None
        ts, ys = rows.setdefault((ch, end), ([], []))
        ts.append(t * 1e-6)
        ys.append(y * 1e6)
    return [Trace(np.array(ts), np.array(ys), ch, end) for (ch, end), (ts, ys) in rows.items()]
