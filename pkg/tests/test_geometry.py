import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slp_lab.geometry import (
    BeamFrequencies,
    NoSolutionError,
    mirror_solution,
    phase_match,
    probe_angle,
    residual_mismatch,
    solution_cone,
)
from slp_lab.params import C0, PhysicalConstants

TWO_PI = 2 * math.pi
DELTA = TWO_PI * 4e6


def paper_freqs(delta=DELTA):
    return BeamFrequencies.from_constants(PhysicalConstants(), delta)


def _bisect_angle(freqs):
    """Independent oracle: root of |k_s + k_bwc| - |k_probe| over the polar angle."""
    k_p, k_c = freqs.omega_probe / C0, freqs.omega_fwc / C0

    def f(theta):
        kp = k_p * np.array([math.sin(theta), 0.0, math.cos(theta)])
        ks = kp - np.array([0.0, 0.0, k_c])
        kb = ks + np.array([0.0, 0.0, -k_c])  # ideal BWC: equal magnitude, anti-parallel
        return np.linalg.norm(kb) - k_p

    lo, hi = 0.0, math.pi / 2
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_paper_angle():
    angle = probe_angle(paper_freqs())
    assert math.degrees(angle) == pytest.approx(0.345, abs=5e-4)


def test_angle_matches_bisection_oracle():
    f = paper_freqs()
    assert abs(probe_angle(f) - _bisect_angle(f)) < 1e-10


@given(st.floats(min_value=1e8, max_value=5e11))
def test_angle_matches_bisection_for_any_splitting(hf):
    wp = TWO_PI * 377.1e12
    f = BeamFrequencies(wp, wp - TWO_PI * hf, wp - TWO_PI * hf)
    assert abs(probe_angle(f) - _bisect_angle(f)) < 1e-10


def test_degenerate_frequencies_give_zero_angle():
    w = TWO_PI * 377e12
    assert probe_angle(BeamFrequencies(w, w, w)) == 0.0


def test_no_solution():
    with pytest.raises(NoSolutionError):
        probe_angle(BeamFrequencies(1.0e15, 1.1e15, 1.1e15))


def test_momentum_identities_and_energy_conservation():
    sol = phase_match(paper_freqs(0.0))
    np.testing.assert_array_equal(sol.k_spin, sol.k_probe - sol.k_fwc)
    np.testing.assert_array_equal(sol.k_fwd, sol.k_spin + sol.k_fwc)
    k1p = np.linalg.norm(sol.k_fwd)
    assert abs(np.linalg.norm(sol.k_bwd) - k1p) < 1e-9 * k1p


def test_mirror_pair():
    sol = phase_match(paper_freqs())
    m = mirror_solution(sol)
    assert m.angle_deg == pytest.approx(-sol.angle_deg, rel=1e-15)
    assert m.delta_k == pytest.approx(sol.delta_k, rel=1e-12)
    # spin wave vector reflected through the FWC axis
    np.testing.assert_allclose(m.k_spin, sol.k_spin * np.array([-1, -1, 1]), rtol=0, atol=1e-9)


def test_mirror_involution_and_fixed_point():
    sol = phase_match(paper_freqs())
    mm = mirror_solution(mirror_solution(sol))
    for a, b in [(mm.k_probe, sol.k_probe), (mm.k_spin, sol.k_spin), (mm.k_bwd, sol.k_bwd)]:
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)
    assert mm.angle == sol.angle
    w = TWO_PI * 377e12
    zero = phase_match(BeamFrequencies(w, w, w))
    mz = mirror_solution(zero)
    np.testing.assert_allclose(mz.k_probe, zero.k_probe, rtol=0, atol=0)


@given(st.floats(min_value=0, max_value=2 * math.pi), st.floats(min_value=0, max_value=2 * math.pi))
def test_cone_mismatch_independent_of_azimuth(a, b):
    f = paper_freqs()
    sa, sb = solution_cone(f, azimuth=a), solution_cone(f, azimuth=b)
    assert sa.delta_k == pytest.approx(sb.delta_k, rel=1e-12)
    assert sa.angle == sb.angle


def test_cone_in_plane_pair_and_periodicity():
    f = paper_freqs()
    s0 = solution_cone(f, azimuth=0.0)
    spi = solution_cone(f, azimuth=math.pi)
    np.testing.assert_allclose(spi.k_probe[:2], -s0.k_probe[:2], rtol=0, atol=1e-9)
    s2pi = solution_cone(f, azimuth=2 * math.pi)
    np.testing.assert_array_equal(s2pi.k_probe, s0.k_probe)


def test_perfect_matching_has_zero_residual():
    f = paper_freqs(0.0)
    sol = phase_match(f)
    assert residual_mismatch(sol, f, 10e-3) < 1e-9


def test_detuned_bwc_collinear_against_explicit_vectors():
    # degenerate probe/FWC, collinear beams, BWC delta below the FWC
    w = TWO_PI * 377.107e12
    f = BeamFrequencies(w, w, w - DELTA)
    sol = phase_match(f)
    assert sol.angle == 0.0
    L = 10e-3
    kp = np.array([0.0, 0.0, w / C0])
    ks = kp - np.array([0.0, 0.0, w / C0])
    kb = ks + np.array([0.0, 0.0, -(w - DELTA) / C0])
    oracle = abs(np.linalg.norm(kb) - np.linalg.norm(kp)) * L
    got = residual_mismatch(sol, f, L)
    assert got == pytest.approx(oracle, rel=1e-6)
    assert got == pytest.approx(DELTA / C0 * L, rel=1e-6)  # about 8.4e-4


def test_bwc_tilt_increases_mismatch():
    f = paper_freqs()
    base = phase_match(f).delta_k_L
    tilted = phase_match(f, bwc_tilt=math.radians(0.1)).delta_k_L
    assert tilted > base


def test_angle_monotone_in_splitting():
    wc = TWO_PI * 377.1e12
    angles = [probe_angle(BeamFrequencies(wc + TWO_PI * hf, wc, wc)) for hf in np.linspace(1e9, 20e9, 40)]
    assert all(b > a for a, b in zip(angles, angles[1:]))
