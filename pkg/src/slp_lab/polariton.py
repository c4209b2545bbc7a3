"""Mean-field algebra of the two-component dark-state polariton.

``psi = (E+ cos(phi) + E- sin(phi)) cos(theta) - S sin(theta)`` with
``tan(phi) = Omega_bwc / Omega_fwc`` and ``tan(theta)^2 = g^2 N / Omega^2``.
Operators are replaced by classical complex amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import ControlParams

__all__ = ["MixingAngles", "PolaritonSample", "mixing_angles", "group_velocity", "polariton_amplitude"]


class UndefinedAngleError(ValueError):
    """Mixing angle requested where both coupling fields vanish."""


@dataclass(frozen=True)
class MixingAngles:
    phi: float
    theta: float

    def __post_init__(self):
        half_pi = math.pi / 2
        if not 0.0 <= self.phi <= half_pi:
            raise ValueError(f"phi={self.phi} outside [0, pi/2]")
        if not 0.0 <= self.theta <= half_pi:
            raise ValueError(f"theta={self.theta} outside [0, pi/2]")


@dataclass(frozen=True)
class PolaritonSample:
    e_plus: complex
    e_minus: complex
    spin: complex
    angles: MixingAngles

    @property
    def psi(self) -> complex:
        return polariton_amplitude(self.e_plus, self.e_minus, self.spin, self.angles)


def mixing_angles(controls: ControlParams, g_n: float) -> MixingAngles:
    """Mixing angles for the given couplings (both in the model convention)."""
    omega = controls.omega_total
    if omega == 0.0:
        raise UndefinedAngleError("Omega_fwc = Omega_bwc = 0: the polariton is pure spin wave")
    phi = math.atan2(controls.omega_bwc, controls.omega_fwc)
    theta = math.atan2(math.sqrt(g_n), omega)
    return MixingAngles(phi, theta)


def group_velocity(angles: MixingAngles, c0: float) -> float:
    """``c0 cos^2(theta) cos(2 phi)``; negative when the backward drive dominates."""
    if angles.phi == math.pi / 4:
        return 0.0
    return c0 * math.cos(angles.theta) ** 2 * math.cos(2.0 * angles.phi)


def polariton_amplitude(e_plus: complex, e_minus: complex, spin: complex, angles: MixingAngles) -> complex:
    c_phi, s_phi = math.cos(angles.phi), math.sin(angles.phi)
    c_th, s_th = math.cos(angles.theta), math.sin(angles.theta)
    return (e_plus * c_phi + e_minus * s_phi) * c_th - spin * s_th
