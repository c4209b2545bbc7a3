"""Parameter files: flat ``key = value`` documents with unit-suffixed scalars.

Recognised keys (dimension in brackets)::

    lambda_p [length]       probe wavelength
    omega_hf [rate]         ground hyperfine splitting
    od [-]                  resonant intensity optical depth (transmission exp(-od))
    length [length]         medium length
    gamma_s [rate]          ground-state coherence dephasing rate
    gamma_e [rate]          excited-state decay rate
    n_atoms [-]             atom number (optional bookkeeping)
    omega_fwc [rate]        nominal FWC Rabi frequency, model convention
    omega_bwc [rate]        nominal BWC Rabi frequency, model convention
    delta [rate]            FWC-BWC detuning (BWC below FWC)
    ramp_time [time]        default control ramp
    delta_k_l [-]           default phase mismatch applied to every channel
    bwc_tilt [angle]        BWC misalignment from anti-parallel
    g_single [rate]         single-atom coupling (cavity analogy)
    kappa_cavity [rate]     effective cavity linewidth (cavity analogy)
    tau_g_ref [time]        reference slow-light delay for the cooperativity chain
    ch<N>.od_eff [-]        per-channel optical depth
    ch<N>.overlap [-]       per-channel coupling overlap in (0, 1]
    ch<N>.angle [angle]     injection angle tag
    ch<N>.delta_k_l [-]     per-channel phase mismatch

Angular rates need ``rad/s`` or an ``_x2pi`` frequency unit; unknown keys are errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .dynamics import ChannelParams
from .params import (
    C0,
    CavityAnalogyParams,
    ControlParams,
    EnsembleParams,
    PhysicalConstants,
)
from .units import UnitError, parse_quantity

__all__ = ["ConfigError", "ParameterSet", "parse_params", "load_params", "DEFAULT_PARAMS"]

DEFAULT_PARAMS = "paper.params"

_GLOBAL_KEYS = {
    "lambda_p": "length",
    "omega_hf": "rate",
    "od": "dimensionless",
    "length": "length",
    "gamma_s": "rate",
    "gamma_e": "rate",
    "n_atoms": "dimensionless",
    "omega_fwc": "rate",
    "omega_bwc": "rate",
    "delta": "rate",
    "ramp_time": "time",
    "delta_k_l": "dimensionless",
    "bwc_tilt": "angle",
    "g_single": "rate",
    "kappa_cavity": "rate",
    "tau_g_ref": "time",
}
_CHANNEL_KEYS = {"od_eff": "dimensionless", "overlap": "dimensionless", "angle": "angle", "delta_k_l": "dimensionless"}
_REQUIRED = ("od", "length", "gamma_s", "gamma_e", "omega_fwc")
_CHANNEL_KEY = re.compile(r"^ch(\d+)\.(\w+)$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ParameterSet:
    constants: PhysicalConstants
    ensemble: EnsembleParams
    controls: ControlParams
    channels: dict = field(default_factory=dict)
    cavity: CavityAnalogyParams = field(default_factory=lambda: CavityAnalogyParams(0.0, 0.0))
    tau_g_ref: float = 2e-6
    bwc_tilt: float = 0.0
    delta_k_l: float = 0.0

    def with_channels(self, channels: dict) -> "ParameterSet":
        return replace(self, channels=dict(channels))


def parse_params(text: str) -> ParameterSet:
    values: dict[str, float] = {}
    chans: dict[int, dict[str, float]] = {}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        m = _CHANNEL_KEY.match(key)
        try:
            if m:
                ch, sub = int(m.group(1)), m.group(2)
                if sub not in _CHANNEL_KEYS:
                    raise ConfigError(f"unknown channel key {key!r}", lineno)
                chans.setdefault(ch, {})[sub] = parse_quantity(value, _CHANNEL_KEYS[sub])
            elif key in _GLOBAL_KEYS:
                values[key] = parse_quantity(value, _GLOBAL_KEYS[key])
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except UnitError as exc:
            raise ConfigError(str(exc), lineno) from None

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    try:
        constants = PhysicalConstants(
            C0,
            values.get("lambda_p", PhysicalConstants.lambda_p),
            values.get("omega_hf", PhysicalConstants.omega_hf),
        )
        ensemble = EnsembleParams.from_od(
            values["od"], values["length"], values["gamma_s"], values["gamma_e"], values.get("n_atoms")
        )
        controls = ControlParams(
            values["omega_fwc"],
            values.get("omega_bwc", values["omega_fwc"]),
            values.get("delta", ControlParams.delta),
            values.get("ramp_time", ControlParams.ramp_time),
        )
        dkl = values.get("delta_k_l", 0.0)
        channels = {}
        for ch, kv in sorted(chans.items()):
            channels[ch] = ChannelParams(
                kv.get("od_eff", ensemble.od), kv.get("overlap", 1.0), kv.get("angle", 0.0), kv.get("delta_k_l", dkl)
            )
        if not channels:
            channels[1] = ChannelParams(ensemble.od, 1.0, 0.0, dkl)
        cavity = CavityAnalogyParams(values.get("g_single", 0.0), values.get("kappa_cavity", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ParameterSet(
        constants, ensemble, controls, channels, cavity, values.get("tau_g_ref", 2e-6), values.get("bwc_tilt", 0.0), dkl
    )


def load_params(path=None) -> ParameterSet:
    """Load a parameter file; ``None`` loads the shipped paper parameter set."""
    if path is None:
        text = resources.files("slp_lab.data").joinpath(DEFAULT_PARAMS).read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_params(text)
