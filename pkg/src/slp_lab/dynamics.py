"""One-dimensional Maxwell-Bloch dynamics for two counter-propagating probe channels.

Per channel the medium coordinate is normalised, ``xi = z / L`` in [0, 1], and
the amplitudes are scaled so that ``|F|^2`` is a photon flux (1/s) and
``|P|^2``, ``|S|^2`` are excitation densities per unit ``xi``. With
``kappa^2 = OD * Gamma / 4`` the equations are::

    dF+/dxi =  i kappa P+                       (quasi-static forward field)
   -dF-/dxi =  i kappa P-                       (quasi-static backward field)
    dP+/dt  = -(Gamma/2) P+          + i kappa F+ + i W+ S
    dP-/dt  = -(Gamma/2 + i Delta) P- + i kappa F- + i W- e^{+i q xi} S
    dS/dt   = -gamma_s S + i W+ P+ + i W- e^{-i q xi} P-

where ``W+-`` are the FWC/BWC Rabi frequencies (model convention) scaled by the
channel overlap and ``q = Delta_k L``. Boundary conditions are
``F+(0) = probe drive`` and ``F-(1) = 0``.

The default integrator eliminates ``P+-`` adiabatically, solves the linear
field equations exactly for a piecewise-linear spin wave and advances ``S``
with classical RK4. ``method="full"`` keeps ``dP/dt`` and advances
``(P+, P-, S)`` with RK4 at small ``dt``; it serves as the reference.

Excitation bookkeeping follows from the continuity equation
``d/dt (|S|^2 + |P|^2) + d/dxi (|F+|^2 - |F-|^2) = -Gamma |P|^2 - 2 gamma_s |S|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .params import ControlParams, EnsembleParams
from .sequence import CompiledTimeline, SequenceError, Timeline, compile_timeline

__all__ = [
    "NumericalError",
    "Grid",
    "ChannelParams",
    "DissipationLedger",
    "SimState",
    "ChannelTrace",
    "TraceSet",
    "initial_state",
    "step",
    "run",
    "centroid_velocity",
    "UndefinedMeasurementError",
]


class NumericalError(RuntimeError):
    """The integrator produced non-finite values."""


class UndefinedMeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n_z: int = 256
    length: float = 10e-3
    dt: float = 1e-9
    t_end: float = 12e-6

    def __post_init__(self):
        if self.n_z < 16:
            raise ValueError("n_z must be at least 16")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")

    @property
    def dz(self) -> float:
        return self.length / (self.n_z - 1)

    @property
    def h(self) -> float:
        """Normalised spatial step."""
        return 1.0 / (self.n_z - 1)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_z)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class ChannelParams:
    od_eff: float = 60.0
    overlap: float = 1.0
    angle: float = 0.0
    delta_k_l: float = 0.0

    def __post_init__(self):
        if not self.od_eff > 0:
            raise ValueError("od_eff must be positive")
        if not 0.0 < self.overlap <= 1.0:
            raise ValueError("overlap must lie in (0, 1]")


@dataclass(frozen=True)
class DissipationLedger:
    input_ex: float = 0.0
    emitted_fwd: float = 0.0
    emitted_bwd: float = 0.0
    dissipated_e: float = 0.0
    dissipated_s: float = 0.0
    stored: float = 0.0

    @property
    def accounted(self) -> float:
        return self.emitted_fwd + self.emitted_bwd + self.dissipated_e + self.dissipated_s + self.stored

    @property
    def residual(self) -> float:
        return self.input_ex - self.accounted

    def as_dict(self) -> dict:
        return {
            "input_ex": self.input_ex,
            "emitted_fwd": self.emitted_fwd,
            "emitted_bwd": self.emitted_bwd,
            "dissipated_e": self.dissipated_e,
            "dissipated_s": self.dissipated_s,
            "stored": self.stored,
        }


@dataclass
class SimState:
    e_plus: np.ndarray
    e_minus: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    spin: np.ndarray
    t: float = 0.0
    ledger: DissipationLedger = field(default_factory=DissipationLedger)


# ---------------------------------------------------------------- medium constants


@dataclass(frozen=True)
class _Medium:
    kappa: float
    gamma_p: complex
    gamma_m: complex
    gamma_e: float
    gamma_s: float
    phase: np.ndarray
    h: float
    overlap: float

    @classmethod
    def build(cls, ensemble: EnsembleParams, channel: ChannelParams, delta: float, grid: Grid) -> "_Medium":
        kappa2 = channel.od_eff * ensemble.gamma_e / 4.0
        return cls(
            kappa=math.sqrt(kappa2),
            gamma_p=complex(ensemble.gamma_e / 2.0, 0.0),
            gamma_m=complex(ensemble.gamma_e / 2.0, delta),
            gamma_e=ensemble.gamma_e,
            gamma_s=ensemble.gamma_s,
            phase=np.exp(1j * channel.delta_k_l * grid.xi),
            h=grid.h,
            overlap=channel.overlap,
        )

    def exp_coefficients(self, gamma: complex) -> tuple[complex, complex, complex]:
        """Cell propagator for y' = -a y - b s with s linear over the cell, a = kappa^2/gamma."""
        a = self.kappa**2 / gamma
        h = self.h
        z = a * h
        if abs(z) < 1e-3:
            q1 = h * (1 - z / 2 + z * z / 6 - z**3 / 24)
            q2 = h * (0.5 - z / 6 + z * z / 24 - z**3 / 120)
        else:
            e = np.exp(-z)
            q1 = (1 - e) / a
            q2 = (z - 1 + e) / (a * z)
        return complex(np.exp(-z)), complex(q1 - q2), complex(q2)


# ---------------------------------------------------------------- kernels

# diagnostic columns
_FWD, _BWD, _IN, _STORED, _DISS_E, _DISS_S, _M1 = range(7)
_NDIAG = 7


@njit(cache=True)
def _adiabatic_fields(S, wp, wm, fin, kappa, gp, gm, ph, Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm):
    n = S.shape[0]
    bp = kappa * wp / gp
    bm = kappa * wm / gm
    Fp[0] = fin
    for j in range(n - 1):
        Fp[j + 1] = Ep * Fp[j] - bp * (Ap * S[j] + Bp * S[j + 1])
    Fm[n - 1] = 0.0
    for j in range(n - 2, -1, -1):
        Fm[j] = Em * Fm[j + 1] - bm * (Am * ph[j + 1] * S[j + 1] + Bm * ph[j] * S[j])
    for j in range(n):
        Pp[j] = 1j * (kappa * Fp[j] + wp * S[j]) / gp
        Pm[j] = 1j * (kappa * Fm[j] + wm * ph[j] * S[j]) / gm


@njit(cache=True)
def _adiabatic_rhs(S, wp, wm, fin, kappa, gp, gm, gs, ph, Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm, out):
    _adiabatic_fields(S, wp, wm, fin, kappa, gp, gm, ph, Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm)
    for j in range(S.shape[0]):
        out[j] = -gs * S[j] + 1j * wp * Pp[j] + 1j * wm * np.conj(ph[j]) * Pm[j]


@njit(cache=True)
def _diagnostics(row, S, Pp, Pm, Fp, Fm, fin, h, gamma_e, gs, include_p):
    n = S.shape[0]
    stored = 0.0
    diss_e = 0.0
    diss_s = 0.0
    m1 = 0.0
    for j in range(n):
        w = h if 0 < j < n - 1 else 0.5 * h
        s2 = S[j].real ** 2 + S[j].imag ** 2
        p2 = Pp[j].real ** 2 + Pp[j].imag ** 2 + Pm[j].real ** 2 + Pm[j].imag ** 2
        dens = s2 + p2 if include_p else s2
        stored += w * dens
        diss_e += w * gamma_e * p2
        diss_s += w * 2.0 * gs * s2
        m1 += w * (j * h) * dens
    row[_FWD] = Fp[n - 1].real ** 2 + Fp[n - 1].imag ** 2
    row[_BWD] = Fm[0].real ** 2 + Fm[0].imag ** 2
    row[_IN] = fin.real ** 2 + fin.imag ** 2
    row[_STORED] = stored
    row[_DISS_E] = diss_e
    row[_DISS_S] = diss_s
    row[_M1] = m1


@njit(cache=True)
def _run_adiabatic(S, wp_arr, wm_arr, fin_arr, kappa, gp, gm, gs, gamma_e, ph, h, dt, coeffs, diag):
    """Advance S over len(diag)-1 steps. Controls are sampled at half steps."""
    n = S.shape[0]
    Ep, Ap, Bp, Em, Am, Bm = coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4], coeffs[5]
    Fp = np.empty(n, np.complex128)
    Fm = np.empty(n, np.complex128)
    Pp = np.empty(n, np.complex128)
    Pm = np.empty(n, np.complex128)
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    nsteps = diag.shape[0] - 1
    _adiabatic_fields(S, wp_arr[0], wm_arr[0], fin_arr[0], kappa, gp, gm, ph, Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm)
    _diagnostics(diag[0], S, Pp, Pm, Fp, Fm, fin_arr[0], h, gamma_e, gs, False)
    for i in range(nsteps):
        a, b, c = 2 * i, 2 * i + 1, 2 * i + 2
        _adiabatic_rhs(S, wp_arr[a], wm_arr[a], fin_arr[a], kappa, gp, gm, gs, ph,
                       Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm, k1)
        for j in range(n):
            tmp[j] = S[j] + 0.5 * dt * k1[j]
        _adiabatic_rhs(tmp, wp_arr[b], wm_arr[b], fin_arr[b], kappa, gp, gm, gs, ph,
                       Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm, k2)
        for j in range(n):
            tmp[j] = S[j] + 0.5 * dt * k2[j]
        _adiabatic_rhs(tmp, wp_arr[b], wm_arr[b], fin_arr[b], kappa, gp, gm, gs, ph,
                       Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm, k3)
        for j in range(n):
            tmp[j] = S[j] + dt * k3[j]
        _adiabatic_rhs(tmp, wp_arr[c], wm_arr[c], fin_arr[c], kappa, gp, gm, gs, ph,
                       Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm, k4)
        finite = True
        for j in range(n):
            S[j] = S[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not (np.isfinite(S[j].real) and np.isfinite(S[j].imag)):
                finite = False
        if not finite:
            return i + 1
        _adiabatic_fields(S, wp_arr[c], wm_arr[c], fin_arr[c], kappa, gp, gm, ph,
                          Ep, Ap, Bp, Em, Am, Bm, Fp, Fm, Pp, Pm)
        _diagnostics(diag[i + 1], S, Pp, Pm, Fp, Fm, fin_arr[c], h, gamma_e, gs, False)
    return -1


@njit(cache=True)
def _full_fields(P_p, P_m, fin, kappa, h, Fp, Fm):
    n = P_p.shape[0]
    Fp[0] = fin
    for j in range(n - 1):
        Fp[j + 1] = Fp[j] + 0.5j * kappa * h * (P_p[j] + P_p[j + 1])
    Fm[n - 1] = 0.0
    for j in range(n - 2, -1, -1):
        Fm[j] = Fm[j + 1] + 0.5j * kappa * h * (P_m[j] + P_m[j + 1])


@njit(cache=True)
def _full_rhs(Y, wp, wm, fin, kappa, gp, gm, gs, ph, h, Fp, Fm, out):
    n = ph.shape[0]
    P_p = Y[0:n]
    P_m = Y[n:2 * n]
    S = Y[2 * n:3 * n]
    _full_fields(P_p, P_m, fin, kappa, h, Fp, Fm)
    for j in range(n):
        out[j] = -gp * P_p[j] + 1j * kappa * Fp[j] + 1j * wp * S[j]
        out[n + j] = -gm * P_m[j] + 1j * kappa * Fm[j] + 1j * wm * ph[j] * S[j]
        out[2 * n + j] = -gs * S[j] + 1j * wp * P_p[j] + 1j * wm * np.conj(ph[j]) * P_m[j]


@njit(cache=True)
def _run_full(Y, wp_arr, wm_arr, fin_arr, kappa, gp, gm, gs, gamma_e, ph, h, dt, diag):
    n = ph.shape[0]
    m = Y.shape[0]
    Fp = np.empty(n, np.complex128)
    Fm = np.empty(n, np.complex128)
    k1 = np.empty(m, np.complex128)
    k2 = np.empty(m, np.complex128)
    k3 = np.empty(m, np.complex128)
    k4 = np.empty(m, np.complex128)
    tmp = np.empty(m, np.complex128)
    nsteps = diag.shape[0] - 1
    _full_fields(Y[0:n], Y[n:2 * n], fin_arr[0], kappa, h, Fp, Fm)
    _diagnostics(diag[0], Y[2 * n:], Y[0:n], Y[n:2 * n], Fp, Fm, fin_arr[0], h, gamma_e, gs, True)
    for i in range(nsteps):
        a, b, c = 2 * i, 2 * i + 1, 2 * i + 2
        _full_rhs(Y, wp_arr[a], wm_arr[a], fin_arr[a], kappa, gp, gm, gs, ph, h, Fp, Fm, k1)
        for j in range(m):
            tmp[j] = Y[j] + 0.5 * dt * k1[j]
        _full_rhs(tmp, wp_arr[b], wm_arr[b], fin_arr[b], kappa, gp, gm, gs, ph, h, Fp, Fm, k2)
        for j in range(m):
            tmp[j] = Y[j] + 0.5 * dt * k2[j]
        _full_rhs(tmp, wp_arr[b], wm_arr[b], fin_arr[b], kappa, gp, gm, gs, ph, h, Fp, Fm, k3)
        for j in range(m):
            tmp[j] = Y[j] + dt * k3[j]
        _full_rhs(tmp, wp_arr[c], wm_arr[c], fin_arr[c], kappa, gp, gm, gs, ph, h, Fp, Fm, k4)
        finite = True
        for j in range(m):
            Y[j] = Y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not (np.isfinite(Y[j].real) and np.isfinite(Y[j].imag)):
                finite = False
        if not finite:
            return i + 1
        _full_fields(Y[0:n], Y[n:2 * n], fin_arr[c], kappa, h, Fp, Fm)
        _diagnostics(diag[i + 1], Y[2 * n:], Y[0:n], Y[n:2 * n], Fp, Fm, fin_arr[c], h, gamma_e, gs, True)
    return -1


# ---------------------------------------------------------------- python surface


def initial_state(grid: Grid, spin: np.ndarray | None = None, t: float = 0.0) -> SimState:
    """Empty medium, or a prepared spin wave (e.g. an ideally compressed stored pulse)."""
    n = grid.n_z
    s = np.zeros(n, complex) if spin is None else np.array(spin, dtype=complex)
    if s.shape != (n,):
        raise ValueError(f"spin must have shape ({n},)")
    zeros = np.zeros(n, complex)
    stored = float(np.trapezoid(np.abs(s) ** 2, dx=grid.h))
    ledger = DissipationLedger(input_ex=stored, stored=stored)
    return SimState(zeros.copy(), zeros.copy(), zeros.copy(), zeros.copy(), s, t, ledger)


def _stability_bound(medium: _Medium, w_max: float, method: str, tau_pulse: float | None) -> float:
    if method == "full":
        rate = max(abs(medium.gamma_p), abs(medium.gamma_m), medium.kappa**2, w_max) + medium.gamma_s
    else:
        rate = w_max**2 / medium.gamma_p.real + medium.gamma_s
    bound = 0.05 / rate if rate > 0 else math.inf
    if tau_pulse is not None:
        bound = min(bound, 0.01 * tau_pulse)
    return bound


def _check(method: str):
    if method not in ("adiabatic", "full"):
        raise ValueError(f"unknown method {method!r}")


def _integrate(state, medium, wp, wm, fin, dt, method):
    """Run the kernel in place on copies; returns (new SimState, diag rows)."""
    nsteps = len(wp) // 2
    diag = np.zeros((nsteps + 1, _NDIAG))
    n = state.spin.shape[0]
    if method == "adiabatic":
        S = state.spin.astype(np.complex128).copy()
        coeffs = np.array(medium.exp_coefficients(medium.gamma_p) + medium.exp_coefficients(medium.gamma_m))
        status = _run_adiabatic(S, wp, wm, fin, medium.kappa, medium.gamma_p, medium.gamma_m, medium.gamma_s,
                                medium.gamma_e, medium.phase, medium.h, dt, coeffs, diag)
        Fp = np.empty(n, complex)
        Fm = np.empty(n, complex)
        Pp = np.empty(n, complex)
        Pm = np.empty(n, complex)
        _adiabatic_fields(S, wp[-1], wm[-1], fin[-1], medium.kappa, medium.gamma_p, medium.gamma_m, medium.phase,
                          *coeffs, Fp, Fm, Pp, Pm)
    else:
        Y = np.concatenate([state.p_plus, state.p_minus, state.spin]).astype(np.complex128)
        status = _run_full(Y, wp, wm, fin, medium.kappa, medium.gamma_p, medium.gamma_m, medium.gamma_s,
                           medium.gamma_e, medium.phase, medium.h, dt, diag)
        Pp, Pm, S = Y[:n].copy(), Y[n:2 * n].copy(), Y[2 * n:].copy()
        Fp = np.empty(n, complex)
        Fm = np.empty(n, complex)
        _full_fields(Pp, Pm, fin[-1], medium.kappa, medium.h, Fp, Fm)
    if status >= 0:
        bad = "spin" if method == "adiabatic" else "p_plus/p_minus/spin"
        raise NumericalError(f"non-finite {bad} at t = {state.t + status * dt:.6e} s")
    return (Fp, Fm, Pp, Pm, S), diag


def _ledger_history(diag: np.ndarray, dt: float, start: DissipationLedger) -> dict[str, np.ndarray]:
    def cum(col):
        r = diag[:, col]
        out = np.zeros_like(r)
        out[1:] = np.cumsum(0.5 * dt * (r[1:] + r[:-1]))
        return out

    return {
        "input_ex": start.input_ex + cum(_IN),
        "emitted_fwd": start.emitted_fwd + cum(_FWD),
        "emitted_bwd": start.emitted_bwd + cum(_BWD),
        "dissipated_e": start.dissipated_e + cum(_DISS_E),
        "dissipated_s": start.dissipated_s + cum(_DISS_S),
        "stored": diag[:, _STORED].copy(),
    }


def step(
    state: SimState,
    omega_fwc,
    omega_bwc,
    drive,
    ensemble: EnsembleParams,
    channel: ChannelParams,
    grid: Grid,
    delta: float,
    method: str = "adiabatic",
) -> SimState:
    """Advance ``state`` by one ``grid.dt``.

    ``omega_fwc``, ``omega_bwc`` and ``drive`` are callables of time giving the
    nominal Rabi frequencies (rad/s, before channel overlap) and the boundary
    amplitude at z = 0.
    """
    _check(method)
    medium = _Medium.build(ensemble, channel, delta, grid)
    ts = state.t + np.array([0.0, 0.5, 1.0]) * grid.dt
    wp = medium.overlap * np.asarray(omega_fwc(ts), dtype=float) * np.ones(3)
    wm = medium.overlap * np.asarray(omega_bwc(ts), dtype=float) * np.ones(3)
    fin = (np.asarray(drive(ts), dtype=float) * np.ones(3)).astype(np.complex128)
    (Fp, Fm, Pp, Pm, S), diag = _integrate(state, medium, wp, wm, fin, grid.dt, method)
    hist = _ledger_history(diag, grid.dt, state.ledger)
    ledger = DissipationLedger(**{k: float(v[-1]) for k, v in hist.items()})
    return SimState(Fp, Fm, Pp, Pm, S, state.t + grid.dt, ledger)


@dataclass
class ChannelTrace:
    """Per-sample output of one channel: end intensities (photons/s) and bookkeeping."""

    channel: int
    fwd: np.ndarray
    bwd: np.ndarray
    inp: np.ndarray
    ledger: dict
    total: np.ndarray
    centroid: np.ndarray
    final: SimState

    def ledger_at(self, i: int) -> DissipationLedger:
        return DissipationLedger(**{k: float(v[i]) for k, v in self.ledger.items()})

    def ledger_residual(self) -> np.ndarray:
        L = self.ledger
        acc = L["emitted_fwd"] + L["emitted_bwd"] + L["dissipated_e"] + L["dissipated_s"] + L["stored"]
        return L["input_ex"] - acc


@dataclass
class TraceSet:
    t: np.ndarray
    channels: dict  # int -> ChannelTrace
    grid: Grid
    method: str
    meta: dict = field(default_factory=dict)

    def __getitem__(self, ch: int) -> ChannelTrace:
        return self.channels[ch]


def _sample_controls(compiled: CompiledTimeline, channel_id: int, grid: Grid, t0: float = 0.0):
    n = grid.n_steps
    ts = t0 + 0.5 * grid.dt * np.arange(2 * n + 1)
    return ts, compiled.fwc(ts), compiled.bwc(ts), compiled.drive(channel_id)(ts).astype(np.complex128)


def run_channel(
    compiled: CompiledTimeline,
    ensemble: EnsembleParams,
    channel_id: int,
    channel: ChannelParams,
    grid: Grid,
    delta: float,
    method: str = "adiabatic",
    spin0: np.ndarray | None = None,
    tau_pulse: float | None = None,
) -> ChannelTrace:
    _check(method)
    medium = _Medium.build(ensemble, channel, delta, grid)
    ts, wf, wb, fin = _sample_controls(compiled, channel_id, grid)
    wp = medium.overlap * wf
    wm = medium.overlap * wb
    w_max = float(max(wp.max(initial=0.0), wm.max(initial=0.0)))
    bound = _stability_bound(medium, w_max, method, tau_pulse)
    if grid.dt > bound * (1 + 1e-12):
        raise ValueError(f"dt = {grid.dt:.3e} s exceeds the stability bound {bound:.3e} s for method {method!r}")
    state = initial_state(grid, spin0)
    (Fp, Fm, Pp, Pm, S), diag = _integrate(state, medium, wp, wm, fin, grid.dt, method)
    hist = _ledger_history(diag, grid.dt, state.ledger)
    total = diag[:, _STORED]
    with np.errstate(invalid="ignore", divide="ignore"):
        centroid = np.where(total > 0, diag[:, _M1] / np.where(total > 0, total, 1.0), np.nan)
    final_ledger = DissipationLedger(**{k: float(v[-1]) for k, v in hist.items()})
    final = SimState(Fp, Fm, Pp, Pm, S, ts[-1], final_ledger)
    return ChannelTrace(channel_id, diag[:, _FWD].copy(), diag[:, _BWD].copy(), diag[:, _IN].copy(),
                        hist, total.copy(), centroid, final)


def run(
    timeline: Timeline | CompiledTimeline,
    ensemble: EnsembleParams,
    channels: dict,
    grid: Grid,
    controls: ControlParams | None = None,
    method: str = "adiabatic",
    spin0: dict | None = None,
) -> TraceSet:
    """Simulate every channel of ``channels`` (id -> ChannelParams) under one timeline.

    Channels share the control waveforms but never couple, so each is
    integrated independently and the results are assembled in channel order.
    ``spin0`` optionally maps channel id to a prepared initial spin wave.
    """
    if isinstance(timeline, Timeline):
        if controls is None:
            raise ValueError("controls are required to compile a Timeline")
        for ch in timeline.channels:
            if ch not in channels:
                raise SequenceError(f"timeline drives undefined channel {ch}")
        tau_pulse = min((p.fwhm for p in timeline.probes()), default=None)
        compiled = compile_timeline(timeline, controls)
        delta = controls.delta
    else:
        compiled = timeline
        tau_pulse = min((p.fwhm for d in compiled.drives.values() for p in d.pulses), default=None)
        delta = controls.delta if controls is not None else 0.0
        for ch in compiled.drives:
            if ch not in channels:
                raise SequenceError(f"timeline drives undefined channel {ch}")
    spin0 = spin0 or {}
    traces = {}
    for ch in sorted(channels):
        traces[ch] = run_channel(compiled, ensemble, ch, channels[ch], grid, delta, method,
                                 spin0.get(ch), tau_pulse)
    t = np.arange(grid.n_steps + 1) * grid.dt
    return TraceSet(t, traces, grid, method)


def centroid_velocity(
    t: np.ndarray, trace: ChannelTrace, window: tuple[float, float], length: float, threshold: float = 1e-12
) -> float:
    """Least-squares slope of the excitation centroid (m/s) over ``window``."""
    t0, t1 = window
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 2:
        raise UndefinedMeasurementError("window holds fewer than two samples")
    if np.any(trace.total[sel] <= threshold) or np.any(~np.isfinite(trace.centroid[sel])):
        raise UndefinedMeasurementError("excitation below threshold inside the window")
    slope = np.polyfit(t[sel], trace.centroid[sel], 1)[0]
    return float(slope * length)
