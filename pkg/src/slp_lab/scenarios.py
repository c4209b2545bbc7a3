"""Built-in scenarios and the per-channel measurements taken on them.

Measurement windows follow the control timeline:

* retrieval window: [FWC switch-on, BWC switch-on or trace end]
* trapping window: [BWC switch-on, BWC switch-off]
* release window: [BWC switch-off, trace end]

Efficiencies integrate forward intensity over a window and divide by the
injected energy of the same channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import analysis as A
from .config import ParameterSet
from .dynamics import Grid, TraceSet, run
from .sequence import SequenceError, Timeline, parse_timeline, sweep_timelines, trap_window

__all__ = [
    "SCENARIOS",
    "load_scenario",
    "scenario_text",
    "channel_traces",
    "measure",
    "ScenarioResult",
    "SweepResult",
    "run_timeline",
    "run_sweep",
]

SCENARIOS = {
    "fig3-eit": ("fig3_eit.seq", "EIT storage for 2 us, FWC-only retrieval"),
    "fig3-slp": ("fig3_slp.seq", "storage followed by a 1 us stationary-light window"),
    "fig4-sweep": ("fig4_sweep.seq", "stationary-light window swept from 0.8 to 2.0 us"),
    "slow-light": ("slow_light.seq", "FWC held on, plain slow-light transit"),
}


def scenario_text(name: str) -> str:
    try:
        filename = SCENARIOS[name][0]
    except KeyError:
        raise SequenceError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    return resources.files("slp_lab.data").joinpath(filename).read_text(encoding="utf-8")


def load_scenario(name: str) -> Timeline:
    return parse_timeline(scenario_text(name))


def channel_traces(traces: TraceSet, ch: int) -> dict[str, A.Trace]:
    c = traces[ch]
    return {
        "fwd": A.Trace(traces.t, c.fwd, ch, "fwd"),
        "bwd": A.Trace(traces.t, c.bwd, ch, "bwd"),
        "in": A.Trace(traces.t, c.inp, ch, "in"),
    }


def _switches(timeline: Timeline, name: str) -> list[tuple[float, float]]:
    return [(e.time, e.level) for e in timeline.controls(name)]


def _storage_interval(timeline: Timeline):
    """(FWC off, FWC on) for the first FWC switch-off that is later undone."""
    fwc = _switches(timeline, "FWC")
    level = timeline.initial.get("FWC", 0.0)
    off = None
    for t, lv in fwc:
        if level > 0 and lv == 0:
            off = t
        elif level == 0 and lv > 0 and off is not None:
            return off, t
        level = lv
    return None


def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except A.AnalysisError:
        return None


def measure(timeline: Timeline, traces: TraceSet) -> dict:
    """Per-channel observables keyed by channel id."""
    t_end = float(traces.t[-1])
    storage = _storage_interval(timeline)
    trap = trap_window(timeline)
    out = {}
    for ch in traces.channels:
        tr = channel_traces(traces, ch)
        e_in = A.pulse_energy(tr["in"])
        m = {"input_energy": e_in}
        res = traces[ch].ledger_residual()
        m["ledger_residual_max"] = float(np.max(np.abs(res)) / e_in) if e_in > 0 else 0.0
        if e_in <= 0:
            out[ch] = m
            continue
        if storage is None and trap is None:
            m["transmission"] = A.efficiency(tr["fwd"], tr["in"])
            m["group_delay"] = _safe(A.group_delay, tr["fwd"], tr["in"])
        if storage is not None:
            t_off, t_on = storage
            stop = trap[0] if trap is not None else t_end
            # the probe may leak past the medium before storage starts
            m["leak_efficiency"] = A.efficiency(tr["fwd"], tr["in"], (0.0, t_off))
            if stop > t_on:
                m["retrieval_efficiency"] = A.efficiency(tr["fwd"], tr["in"], (t_on, stop))
            m["storage_time"] = t_on - t_off
            if trap is None:
                m["group_delay"] = _safe(A.group_delay, tr["fwd"].window(t_on, t_end), tr["in"], t_on - t_off)
        if trap is not None:
            t_bon, t_boff = trap
            during = A.pulse_energy(tr["fwd"], (t_bon, t_boff)) + A.pulse_energy(tr["bwd"], (t_bon, t_boff))
            release = A.pulse_energy(tr["fwd"], (t_boff, t_end))
            m["trap_time"] = t_boff - t_bon
            m["trapped_emission_efficiency"] = during / e_in
            m["release_efficiency"] = release / e_in
            m["trapped_to_release_ratio"] = during / release if release > 0 else float("inf")
            peak = _safe(A.peak_time, tr["fwd"].window(t_boff, t_end))
            m["release_peak_time"] = peak
            m["release_peak_lag"] = None if peak is None else peak - t_boff
        out[ch] = m
    return out


@dataclass
class ScenarioResult:
    name: str
    timeline: Timeline
    traces: TraceSet
    metrics: dict


@dataclass
class SweepResult:
    name: str
    members: list  # of (trap_time, ScenarioResult)
    fits: dict = field(default_factory=dict)  # ch -> DecayFit | None

    @property
    def trap_times(self) -> list[float]:
        return [t for t, _ in self.members]

    def release(self, ch: int) -> list[float]:
        return [r.metrics[ch]["release_efficiency"] for _, r in self.members]


def run_timeline(
    params: ParameterSet, timeline: Timeline, grid: Grid | None = None, method: str = "adiabatic", name: str = ""
) -> ScenarioResult:
    grid = grid or Grid(length=params.ensemble.length, t_end=max(timeline.duration, 1e-9))
    traces = run(timeline, params.ensemble, params.channels, grid, params.controls, method)
    return ScenarioResult(name, timeline, traces, measure(timeline, traces))


def run_sweep(
    params: ParameterSet, timeline: Timeline, grid: Grid | None = None, method: str = "adiabatic", name: str = ""
) -> SweepResult:
    members = []
    for trap, member in sweep_timelines(timeline):
        members.append((trap, run_timeline(params, member, grid, method, name)))
    result = SweepResult(name, members)
    for ch in params.channels:
        try:
            result.fits[ch] = A.fit_exponential(result.trap_times, result.release(ch))
        except A.AnalysisError:
            result.fits[ch] = None
    return result
