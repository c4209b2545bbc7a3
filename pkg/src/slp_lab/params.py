"""Physical constants, ensemble/laser parameters and closed-form estimates.

All angular frequencies are stored in rad/s and everything else in SI.

Two Rabi-frequency conventions appear in this package:

* **model convention** (used by :mod:`slp_lab.dynamics`): ``Omega`` and ``g``
  are the coupling constants multiplying the atomic operators, and the
  resonant intensity optical depth of the bare two-level medium is
  ``OD = 4 g^2 N L / (c0 Gamma)``.
* **full-Rabi convention**: ``Omega`` and ``g`` are twice the model values.
  In this convention the slow-light relations take the compact forms
  ``tau_g = OD Gamma / Omega^2`` and ``v_g = c0 Omega^2 / (Omega^2 + g^2 N)``,
  which is why :func:`infer_rabi_from_delay` and :func:`infer_gn_from_vg`
  return full-Rabi quantities. Use :func:`full_to_model_rabi` before feeding
  such a value to the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "C0",
    "TWO_PI",
    "DomainError",
    "PhysicalConstants",
    "EnsembleParams",
    "ControlParams",
    "CavityAnalogyParams",
    "gn_from_od",
    "od_from_gn",
    "full_to_model_rabi",
    "model_to_full_rabi",
    "infer_rabi_from_delay",
    "infer_gn_from_vg",
    "cooperativity",
    "q_factor",
]

C0 = 299_792_458.0
TWO_PI = 2.0 * math.pi

# Ratio between full-Rabi and model-convention couplings (Omega and g alike).
FULL_RABI_FACTOR = 2.0


class DomainError(ValueError):
    """An estimate was requested outside the domain where it is defined."""


@dataclass(frozen=True)
class PhysicalConstants:
    c0: float = C0
    lambda_p: float = 795e-9
    omega_hf: float = TWO_PI * 6.835e9

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if not self.lambda_p > 0:
            raise ValueError("lambda_p must be positive")
        if not self.omega_hf >= 0:
            raise ValueError("omega_hf must be non-negative")

    @property
    def f0(self) -> float:
        """Probe optical frequency in Hz."""
        return self.c0 / self.lambda_p

    @property
    def omega_probe(self) -> float:
        return TWO_PI * self.f0


def gn_from_od(od: float, length: float, gamma_e: float, c0: float = C0) -> float:
    """Collective coupling g^2 N (model convention) for an intensity OD."""
    if not length > 0:
        raise DomainError("length must be positive")
    return od * c0 * gamma_e / (4.0 * length)


def od_from_gn(g_n: float, length: float, gamma_e: float, c0: float = C0) -> float:
    if not gamma_e > 0:
        raise DomainError("gamma_e must be positive")
    return 4.0 * g_n * length / (c0 * gamma_e)


def full_to_model_rabi(omega_full: float) -> float:
    return omega_full / FULL_RABI_FACTOR


def model_to_full_rabi(omega_model: float) -> float:
    return omega_model * FULL_RABI_FACTOR


@dataclass(frozen=True)
class EnsembleParams:
    """Atomic medium. ``g_n`` is in the model convention and tied to ``od``."""

    od: float
    length: float
    gamma_s: float
    gamma_e: float
    g_n: float
    n_atoms: float | None = None
    c0: float = C0

    def __post_init__(self):
        if not self.od > 0:
            raise ValueError("od must be positive")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if not self.gamma_s >= 0:
            raise ValueError("gamma_s must be non-negative")
        if not self.gamma_e > 0:
            raise ValueError("gamma_e must be positive")
        if not self.g_n >= 0:
            raise ValueError("g_n must be non-negative")
        expected = gn_from_od(self.od, self.length, self.gamma_e, self.c0)
        if abs(self.g_n - expected) > 1e-9 * expected:
            raise ValueError(
                f"g_n={self.g_n:.6e} inconsistent with od={self.od} "
                f"(expected {expected:.6e} = od*c0*gamma_e/(4L))"
            )
        if self.n_atoms is not None and not self.n_atoms > 0:
            raise ValueError("n_atoms must be positive when given")

    @classmethod
    def from_od(
        cls,
        od: float,
        length: float,
        gamma_s: float,
        gamma_e: float,
        n_atoms: float | None = None,
        c0: float = C0,
    ) -> "EnsembleParams":
        return cls(od, length, gamma_s, gamma_e, gn_from_od(od, length, gamma_e, c0), n_atoms, c0)

    @property
    def kappa2(self) -> float:
        """Field-coherence coupling squared per unit normalised length, OD*Gamma/4 (1/s)."""
        return self.g_n * self.length / self.c0


@dataclass(frozen=True)
class ControlParams:
    """Nominal coupling-field settings (model-convention Rabi frequencies)."""

    omega_fwc: float
    omega_bwc: float
    delta: float = TWO_PI * 4e6
    ramp_time: float = 100e-9

    def __post_init__(self):
        if not self.omega_fwc >= 0:
            raise ValueError("omega_fwc must be non-negative")
        if not self.omega_bwc >= 0:
            raise ValueError("omega_bwc must be non-negative")
        if not self.ramp_time > 0:
            raise ValueError("ramp_time must be positive")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def omega_total(self) -> float:
        return math.hypot(self.omega_fwc, self.omega_bwc)


@dataclass(frozen=True)
class CavityAnalogyParams:
    """Cavity-QED analogy numbers; ``q_factor`` must equal 2*pi*f0*tau_diss when all are set."""

    g_single: float
    kappa: float
    q_factor: float | None = None
    tau_diss: float | None = None
    f0: float | None = None
    energy: float | None = None
    power: float | None = None

    def __post_init__(self):
        for name in ("g_single", "kappa", "q_factor", "tau_diss", "f0", "energy", "power"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"{name} must be non-negative")
        if None not in (self.q_factor, self.tau_diss, self.f0):
            expected = TWO_PI * self.f0 * self.tau_diss
            if abs(self.q_factor - expected) > 1e-9 * max(abs(expected), 1e-300):
                raise ValueError("q_factor must equal 2*pi*f0*tau_diss")


def infer_rabi_from_delay(od: float, gamma_e: float, tau_g: float) -> float:
    """Full-Rabi coupling from the slow-light delay, ``sqrt(od*gamma_e/tau_g)``."""
    if not (od > 0 and gamma_e > 0 and tau_g > 0):
        raise DomainError("od, gamma_e and tau_g must all be positive")
    return math.sqrt(od * gamma_e / tau_g)


def infer_gn_from_vg(tau_g: float, length: float, omega: float, c0: float = C0) -> float:
    """g^2 N from v_g = L/tau_g = c0 Omega^2/(Omega^2 + g^2 N)."""
    if not length > 0:
        raise DomainError("length must be positive")
    if tau_g * c0 < length:
        raise DomainError("requested group velocity L/tau_g exceeds c0")
    return omega**2 * (c0 * tau_g / length - 1.0)


def cooperativity(g_single: float, n_atoms: float, kappa: float, gamma_e: float) -> float:
    """N-atom cooperativity 4 g^2 N / (kappa Gamma)."""
    if kappa <= 0 or gamma_e <= 0:
        raise DomainError("kappa and gamma_e must be positive")
    return 4.0 * g_single**2 * n_atoms / (kappa * gamma_e)


def q_factor(f0: float, tau_diss: float) -> float:
    if not f0 > 0:
        raise DomainError("f0 must be positive")
    if not tau_diss >= 0:
        raise DomainError("tau_diss must be non-negative")
    return TWO_PI * f0 * tau_diss
