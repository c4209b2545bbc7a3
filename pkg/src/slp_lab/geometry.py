"""Phase-matching geometry for stationary light pulses.

Frame: the forward coupling beam (FWC) propagates along +z. A probe direction
is described by a signed polar angle ``angle`` from +z and an ``azimuth``
about the z axis, i.e. ``(sin a cos phi, sin a sin phi, cos a)``. The
backward coupling beam (BWC) propagates along -z, optionally tilted by
``bwc_tilt`` in the x-z plane.

The spin wave written by the forward pair is ``k_s = k_probe - k_fwc`` and the
backward field it scatters off the BWC carries ``k_s + k_bwc``. Phase matching
asks ``|k_s + k_bwc| = |k_probe|``; the residual mismatch is the scalar
difference of those magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import C0, PhysicalConstants

__all__ = [
    "NoSolutionError",
    "BeamFrequencies",
    "PhaseMatchSolution",
    "probe_angle",
    "phase_match",
    "mirror_solution",
    "solution_cone",
    "residual_mismatch",
]


class NoSolutionError(ValueError):
    """No probe direction satisfies the phase-matching conditions."""


@dataclass(frozen=True)
class BeamFrequencies:
    omega_probe: float
    omega_fwc: float
    omega_bwc: float

    def __post_init__(self):
        if not (self.omega_probe > 0 and self.omega_fwc > 0 and self.omega_bwc > 0):
            raise ValueError("all beam frequencies must be positive")

    @classmethod
    def from_constants(
        cls, constants: PhysicalConstants, delta: float = 0.0
    ) -> "BeamFrequencies":
        """Probe at ``lambda_p``; FWC two-photon resonant; BWC ``delta`` below FWC."""
        omega_probe = constants.omega_probe
        omega_fwc = omega_probe - constants.omega_hf
        freqs = cls(omega_probe, omega_fwc, omega_fwc - delta)
        if abs(freqs.omega_probe - freqs.omega_fwc - constants.omega_hf) > 1e-6 * constants.omega_hf + 1.0:
            raise ValueError("probe and FWC are not two-photon resonant")
        return freqs


@dataclass(frozen=True)
class PhaseMatchSolution:
    angle: float
    azimuth: float
    k_probe: np.ndarray
    k_fwc: np.ndarray
    k_bwc: np.ndarray
    k_spin: np.ndarray
    k_fwd: np.ndarray
    k_bwd: np.ndarray
    delta_k: float
    delta_k_L: float
    length: float

    @property
    def angle_deg(self) -> float:
        return math.degrees(self.angle)

    def as_dict(self) -> dict:
        return {
            "angle_rad": self.angle,
            "angle_deg": self.angle_deg,
            "azimuth_rad": self.azimuth,
            "k_probe": float(np.linalg.norm(self.k_probe)),
            "k_fwc": float(np.linalg.norm(self.k_fwc)),
            "k_spin": float(np.linalg.norm(self.k_spin)),
            "k_fwd": float(np.linalg.norm(self.k_fwd)),
            "k_bwd": float(np.linalg.norm(self.k_bwd)),
            "delta_k": self.delta_k,
            "delta_k_L": self.delta_k_L,
        }


def _direction(angle: float, azimuth: float) -> np.ndarray:
    s = math.sin(angle)
    return np.array([s * math.cos(azimuth), s * math.sin(azimuth), math.cos(angle)])


def _bwc_vector(k_b: float, tilt: float) -> np.ndarray:
    return np.array([-k_b * math.sin(tilt), 0.0, -k_b * math.cos(tilt)])


def probe_angle(freqs: BeamFrequencies, c0: float = C0) -> float:
    """Polar angle at which an ideal counter-propagating BWC is phase matched.

    Assumes |k_bwc| = |k_fwc| and exact anti-alignment, giving
    ``cos(angle) = k_fwc / k_probe``.
    """
    k_c = freqs.omega_fwc / c0
    k_p = freqs.omega_probe / c0
    if k_c > k_p:
        raise NoSolutionError("FWC wavenumber exceeds probe wavenumber: no phase-matched angle")
    return math.acos(k_c / k_p)


def _mismatch(k_probe: np.ndarray, k_fwc: np.ndarray, k_bwc: np.ndarray) -> float:
    # |k_p + d| - |k_p| with d = k_bwc - k_fwc, arranged to avoid cancellation
    d = k_bwc - k_fwc
    k_p2 = float(k_probe @ k_probe)
    excess = float(d @ d) + 2.0 * float(k_probe @ d)
    return abs(excess / (math.sqrt(k_p2 + excess) + math.sqrt(k_p2)))


def _build(angle, azimuth, freqs, c0, length, bwc_tilt) -> PhaseMatchSolution:
    k_p = freqs.omega_probe / c0
    k_probe = k_p * _direction(angle, azimuth)
    k_fwc = np.array([0.0, 0.0, freqs.omega_fwc / c0])
    k_bwc = _bwc_vector(freqs.omega_bwc / c0, bwc_tilt)
    k_spin = k_probe - k_fwc
    dk = _mismatch(k_probe, k_fwc, k_bwc)
    return PhaseMatchSolution(
        angle=angle,
        azimuth=azimuth,
        k_probe=k_probe,
        k_fwc=k_fwc,
        k_bwc=k_bwc,
        k_spin=k_spin,
        k_fwd=k_spin + k_fwc,
        k_bwd=k_spin + k_bwc,
        delta_k=dk,
        delta_k_L=dk * length,
        length=length,
    )


def phase_match(
    freqs: BeamFrequencies,
    c0: float = C0,
    length: float = 10e-3,
    azimuth: float = 0.0,
    bwc_tilt: float = 0.0,
) -> PhaseMatchSolution:
    """In-plane (or azimuthally rotated) phase-matched solution with its residual."""
    return _build(probe_angle(freqs, c0), azimuth % (2.0 * math.pi), freqs, c0, length, bwc_tilt)


def solution_cone(
    freqs: BeamFrequencies,
    c0: float = C0,
    azimuth: float = 0.0,
    length: float = 10e-3,
    bwc_tilt: float = 0.0,
) -> PhaseMatchSolution:
    """Member of the cone of phase-matched probe directions around the FWC axis."""
    return phase_match(freqs, c0, length, azimuth, bwc_tilt)


def mirror_solution(sol: PhaseMatchSolution) -> PhaseMatchSolution:
    """Reflect the probe through the FWC axis; the coupling beams stay put."""
    flip = np.array([-1.0, -1.0, 1.0])
    k_probe = sol.k_probe * flip
    k_spin = k_probe - sol.k_fwc
    dk = _mismatch(k_probe, sol.k_fwc, sol.k_bwc)
    return PhaseMatchSolution(
        angle=-sol.angle,
        azimuth=sol.azimuth,
        k_probe=k_probe,
        k_fwc=sol.k_fwc,
        k_bwc=sol.k_bwc,
        k_spin=k_spin,
        k_fwd=k_spin + sol.k_fwc,
        k_bwd=k_spin + sol.k_bwc,
        delta_k=dk,
        delta_k_L=dk * sol.length,
        length=sol.length,
    )


def residual_mismatch(
    sol: PhaseMatchSolution,
    freqs: BeamFrequencies,
    length: float,
    c0: float = C0,
    bwc_tilt: float = 0.0,
) -> float:
    """Dimensionless mismatch ``| |k_s + k_bwc| - |k_fwd| | * L`` for the actual BWC."""
    k_fwc = np.array([0.0, 0.0, freqs.omega_fwc / c0])
    k_bwc = _bwc_vector(freqs.omega_bwc / c0, bwc_tilt)
    k_probe = sol.k_spin + k_fwc
    return _mismatch(k_probe, k_fwc, k_bwc) * length
