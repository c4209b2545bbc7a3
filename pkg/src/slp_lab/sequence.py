"""Line-based experiment timelines (``.seq``) and their compilation.

Grammar, one statement per line, ``#`` starts a comment::

    duration <time>
    init <FWC|BWC> <level>
    sweep trap from=<time> to=<time> step=<time>
    at <time> probe ch=<n> fwhm=<time> amp=<x>
    at <time> set <FWC|BWC> <level> [ramp=<time>]

Times carry a unit suffix (``ps``, ``ns``, ``us``, ``ms``, ``s``). Levels are
fractions of the nominal Rabi frequency in [0, 1]. Controls start at level 0
unless an ``init`` line says otherwise. A ``set`` without ``ramp=`` uses the
ramp time of the parameter set (100 ns unless configured).

A probe's ``at`` time is its injection time, taken as the leading
half-maximum crossing of the Gaussian intensity envelope, so the pulse is
centred at ``at + fwhm/2``.

``sweep trap`` turns the file into a family: in each member the last BWC
switch-off is moved to ``(preceding BWC switch-on) + trap``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .params import ControlParams
from .units import UnitError, format_time, parse_quantity

__all__ = [
    "SequenceError",
    "ProbePulse",
    "SetControl",
    "Sweep",
    "Timeline",
    "ControlWaveform",
    "CompiledTimeline",
    "parse_timeline",
    "format_timeline",
    "load_timeline",
    "compile_timeline",
    "sweep_timelines",
    "trap_window",
    "DEFAULT_RAMP",
]

DEFAULT_RAMP = 100e-9
CONTROLS = ("FWC", "BWC")
_SQRT_8LN2 = 2.0 * math.sqrt(2.0 * math.log(2.0))


class SequenceError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class ProbePulse:
    channel: int
    time: float
    fwhm: float
    amplitude: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")

    @property
    def t_center(self) -> float:
        return self.time + 0.5 * self.fwhm

    @property
    def sigma(self) -> float:
        """Standard deviation of the intensity envelope."""
        return self.fwhm / _SQRT_8LN2


@dataclass(frozen=True)
class SetControl:
    field: str
    level: float
    time: float
    ramp: float | None = None  # None: take the ramp from ControlParams at compile time

    def __post_init__(self):
        if self.field not in CONTROLS:
            raise ValueError(f"unknown control {self.field!r}")
        if not 0.0 <= self.level <= 1.0:
            raise ValueError("level must lie in [0, 1]")
        if self.ramp is not None and not self.ramp > 0:
            raise ValueError("ramp must be positive")

    @property
    def ramp_or_default(self) -> float:
        return DEFAULT_RAMP if self.ramp is None else self.ramp

    @property
    def t_start(self) -> float:
        return self.time


Event = Union[ProbePulse, SetControl]


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        n = int(round((self.stop - self.start) / self.step))
        # rounded to the picosecond so members do not inherit float drift
        return [round(self.start + i * self.step, 12) for i in range(n + 1)]


@dataclass(frozen=True)
class Timeline:
    events: tuple = ()
    duration: float = 0.0
    initial: dict = field(default_factory=lambda: {"FWC": 0.0, "BWC": 0.0})
    sweep: Sweep | None = None

    def probes(self) -> list[ProbePulse]:
        return [e for e in self.events if isinstance(e, ProbePulse)]

    def controls(self, name: str) -> list[SetControl]:
        return [e for e in self.events if isinstance(e, SetControl) and e.field == name]

    @property
    def channels(self) -> list[int]:
        return sorted({p.channel for p in self.probes()})


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\S+")


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]


def _time(tok: tuple[str, int], lineno: int) -> float:
    text, col = tok
    try:
        value = parse_quantity(text, "time")
    except UnitError as exc:
        raise SequenceError(str(exc), lineno, col) from None
    if value < 0:
        raise SequenceError(f"negative time {text!r}", lineno, col)
    return value


def _number(tok: tuple[str, int], lineno: int) -> float:
    text, col = tok
    try:
        value = float(text)
    except ValueError:
        raise SequenceError(f"expected a number, got {text!r}", lineno, col) from None
    if not math.isfinite(value):
        raise SequenceError(f"non-finite number {text!r}", lineno, col)
    return value


def _keyword_args(toks, lineno: int, allowed: dict[str, str], required: set[str]) -> dict:
    out = {}
    for text, col in toks:
        key, sep, value = text.partition("=")
        if not sep or key not in allowed:
            raise SequenceError(f"unexpected token {text!r}", lineno, col)
        if key in out:
            raise SequenceError(f"duplicate argument {key!r}", lineno, col)
        vtok = (value, col + len(key) + 1)
        kind = allowed[key]
        if kind == "time":
            out[key] = _time(vtok, lineno)
        elif kind == "int":
            try:
                out[key] = int(value)
            except ValueError:
                raise SequenceError(f"expected an integer, got {value!r}", lineno, vtok[1]) from None
        else:
            out[key] = _number(vtok, lineno)
    missing = required - out.keys()
    if missing:
        raise SequenceError(f"missing argument(s): {', '.join(sorted(missing))}", lineno)
    return out


def _control_name(tok, lineno: int) -> str:
    text, col = tok
    if text not in CONTROLS:
        raise SequenceError(f"expected FWC or BWC, got {text!r}", lineno, col)
    return text


def _level(tok, lineno: int) -> float:
    value = _number(tok, lineno)
    if not 0.0 <= value <= 1.0:
        raise SequenceError(f"level {tok[0]} outside [0, 1]", lineno, tok[1])
    return value


def parse_timeline(text: str) -> Timeline:
    """Parse a ``.seq`` document into a validated :class:`Timeline`."""
    events: list[tuple[Event, int]] = []
    initial = {"FWC": 0.0, "BWC": 0.0}
    duration = None
    sweep = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, col = toks[0]
        if head == "duration":
            if len(toks) != 2:
                raise SequenceError("usage: duration <time>", lineno, col)
            duration = _time(toks[1], lineno)
        elif head == "init":
            if len(toks) != 3:
                raise SequenceError("usage: init <FWC|BWC> <level>", lineno, col)
            initial[_control_name(toks[1], lineno)] = _level(toks[2], lineno)
        elif head == "sweep":
            if len(toks) < 2 or toks[1][0] != "trap":
                raise SequenceError("usage: sweep trap from=<time> to=<time> step=<time>", lineno, col)
            kw = _keyword_args(
                toks[2:], lineno, {"from": "time", "to": "time", "step": "time"}, {"from", "to", "step"}
            )
            if kw["step"] <= 0 or kw["to"] < kw["from"]:
                raise SequenceError("sweep needs step > 0 and to >= from", lineno, col)
            sweep = Sweep(kw["from"], kw["to"], kw["step"])
        elif head == "at":
            if len(toks) < 3:
                raise SequenceError("incomplete event", lineno, col)
            t = _time(toks[1], lineno)
            kind, kcol = toks[2]
            if kind == "probe":
                kw = _keyword_args(
                    toks[3:], lineno, {"ch": "int", "fwhm": "time", "amp": "number"}, {"ch", "fwhm", "amp"}
                )
                if kw["fwhm"] <= 0:
                    raise SequenceError("fwhm must be positive", lineno, kcol)
                events.append((ProbePulse(kw["ch"], t, kw["fwhm"], kw["amp"]), lineno))
            elif kind == "set":
                if len(toks) < 5:
                    raise SequenceError("usage: at <time> set <FWC|BWC> <level> [ramp=<time>]", lineno, kcol)
                name = _control_name(toks[3], lineno)
                level = _level(toks[4], lineno)
                kw = _keyword_args(toks[5:], lineno, {"ramp": "time"}, set())
                ramp = kw.get("ramp")
                if ramp is not None and ramp <= 0:
                    raise SequenceError("ramp must be positive", lineno, kcol)
                events.append((SetControl(name, level, t, ramp), lineno))
            else:
                raise SequenceError(f"unknown event kind {kind!r}", lineno, kcol)
        else:
            raise SequenceError(f"unknown statement {head!r}", lineno, col)

    events.sort(key=lambda pair: pair[0].time)
    _check_ramps(events)
    last = max((e.time for e, _ in events), default=0.0)
    if duration is None:
        duration = last
    else:
        for e, lineno in events:
            if e.time > duration:
                raise SequenceError(f"event at {format_time(e.time)} beyond duration", lineno)
    return Timeline(tuple(e for e, _ in events), duration, initial, sweep)


def _check_ramps(events, default_ramp: float = DEFAULT_RAMP) -> None:
    for name in CONTROLS:
        prev = None
        for e, lineno in events:
            if isinstance(e, SetControl) and e.field == name:
                if prev is not None:
                    end = prev.time + (default_ramp if prev.ramp is None else prev.ramp)
                    # relative slack absorbs float rounding of back-to-back ramps
                    if e.time < end * (1 - 1e-12):
                        raise SequenceError(f"{name} ramp overlaps the previous {name} ramp", lineno)
                prev = e


def format_timeline(timeline: Timeline) -> str:
    """Inverse of :func:`parse_timeline` (up to comments and spacing)."""
    lines = [f"duration {format_time(timeline.duration)}"]
    for name in CONTROLS:
        level = timeline.initial.get(name, 0.0)
        if level:
            lines.append(f"init {name} {level!r}")
    if timeline.sweep is not None:
        s = timeline.sweep
        lines.append(f"sweep trap from={format_time(s.start)} to={format_time(s.stop)} step={format_time(s.step)}")
    for e in timeline.events:
        if isinstance(e, ProbePulse):
            lines.append(
                f"at {format_time(e.time)} probe ch={e.channel} fwhm={format_time(e.fwhm)} amp={e.amplitude!r}"
            )
        else:
            ramp = "" if e.ramp is None else f" ramp={format_time(e.ramp)}"
            lines.append(f"at {format_time(e.time)} set {e.field} {e.level!r}{ramp}")
    return "\n".join(lines) + "\n"


def load_timeline(path) -> Timeline:
    return parse_timeline(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- sweeps


def trap_window(timeline: Timeline) -> tuple[float, float] | None:
    """(BWC switch-on, BWC switch-off) times of the last trapping window."""
    bwc = timeline.controls("BWC")
    for i in range(len(bwc) - 1, 0, -1):
        if bwc[i].level == 0.0 and bwc[i - 1].level > 0.0:
            return bwc[i - 1].time, bwc[i].time
    return None


def sweep_timelines(timeline: Timeline) -> list[tuple[float, Timeline]]:
    """Expand a ``sweep trap`` timeline into ``(trap_time, member)`` pairs."""
    if timeline.sweep is None:
        raise SequenceError("timeline has no sweep statement")
    window = trap_window(timeline)
    if window is None:
        raise SequenceError("sweep trap needs a BWC switch-on followed by a BWC switch-off")
    t_on, t_off = window
    members = []
    for trap in timeline.sweep.values():
        new_off = round(t_on + trap, 12)
        events = []
        for e in timeline.events:
            if isinstance(e, SetControl) and e.field == "BWC" and e.time == t_off:
                e = replace(e, time=new_off)
            events.append(e)
        events.sort(key=lambda e: e.time)
        _check_ramps([(e, None) for e in events])
        duration = max(timeline.duration, new_off)
        members.append((trap, Timeline(tuple(events), duration, dict(timeline.initial), None)))
    return members


# ---------------------------------------------------------------- compilation


def _raised_cosine(t, t0: float, ramp: float, start: float, stop: float):
    s = np.clip((t - t0) / ramp, 0.0, 1.0)
    return start + (stop - start) * 0.5 * (1.0 - np.cos(np.pi * s))


@dataclass(frozen=True)
class ControlWaveform:
    """Continuous level profile of one coupling field times its nominal Rabi frequency."""

    nominal: float
    initial: float
    switches: tuple  # of SetControl

    def level(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.initial)
        prev = self.initial
        for sw in self.switches:
            ramped = _raised_cosine(t, sw.time, sw.ramp_or_default, prev, sw.level)
            out = np.where(t >= sw.time, ramped, out)
            prev = sw.level
        return out

    def __call__(self, t):
        return self.nominal * self.level(t)


@dataclass(frozen=True)
class ProbeDrive:
    """Boundary field amplitude at z = 0; ``|amplitude|^2`` is a photon flux in 1/s.

    ``amp = 1`` corresponds to a peak flux of one photon per microsecond.
    """

    pulses: tuple  # of ProbePulse

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for p in self.pulses:
            x = t - p.t_center
            inside = np.abs(x) <= 3.0 * p.sigma
            out = out + np.where(inside, p.amplitude * 1e3 * np.exp(-0.25 * (x / p.sigma) ** 2), 0.0)
        return out


@dataclass(frozen=True)
class CompiledTimeline:
    fwc: ControlWaveform
    bwc: ControlWaveform
    drives: dict  # channel -> ProbeDrive
    duration: float

    def drive(self, channel: int) -> Callable:
        return self.drives.get(channel, ProbeDrive(()))


def compile_timeline(timeline: Timeline, controls: ControlParams) -> CompiledTimeline:
    """Turn a timeline into ramped Rabi waveforms and per-channel probe drives."""
    _check_ramps([(e, None) for e in timeline.events], controls.ramp_time)

    def switches(name):
        return tuple(e if e.ramp is not None else replace(e, ramp=controls.ramp_time) for e in timeline.controls(name))

    fwc = ControlWaveform(controls.omega_fwc, timeline.initial.get("FWC", 0.0), switches("FWC"))
    bwc = ControlWaveform(controls.omega_bwc, timeline.initial.get("BWC", 0.0), switches("BWC"))
    drives = {}
    for ch in timeline.channels:
        drives[ch] = ProbeDrive(tuple(p for p in timeline.probes() if p.channel == ch))
    return CompiledTimeline(fwc, bwc, drives, timeline.duration)
