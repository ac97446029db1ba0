from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cornerflow.errors import BadCount, NoExtrema, NoJoint
from cornerflow.profile import (
    CUBE_ROOT_3,
    AngleProfile,
    JointInfo,
    append_exponential_tail,
    assemble_grid,
    estimate_theta_minus,
    exponential_tail,
    filter_multiplier,
    find_joint,
    spectral_filter,
    theta_s_from_theta,
)

from .conftest import smooth_profile


def test_grid_size_must_be_power_of_two():
    with pytest.raises(BadCount):
        AngleProfile(s_a=0.0, s_b=1.0, theta=np.zeros(12), theta_minus=0.0, theta_plus=0.0)


def test_periodized_field_round_trip():
    p = smooth_profile()
    tilde = p.periodized()
    assert tilde[0] == 0.0 and abs(tilde[-1]) < 1e-15
    back = AngleProfile.from_periodized(tilde, p)
    assert np.allclose(back.theta, p.theta, atol=1e-15)
    assert back.theta[0] == p.theta_minus and back.theta[-1] == p.theta_plus


def test_node_lookup():
    p = smooth_profile(N=64, L=8.0, s_a=-4.0)
    assert p.node_index(0.0) == 32
    assert p.node_index(0.01) is None
    assert p.node_index(10.0) is None


@given(st.integers(1, 5), st.floats(0.05, 1.0), st.floats(-2.0, 2.0))
def test_spectral_derivative_exact_on_band_limited_field(m, amp, jump):
    N, L = 128, 7.0
    s = L * np.arange(N + 1) / N
    theta = jump * s / L + amp * np.sin(2 * np.pi * m * s / L)
    p = AngleProfile(s_a=0.0, s_b=L, theta=theta, theta_minus=0.0, theta_plus=jump)
    p.theta[-1] = jump
    exact = jump / L + amp * 2 * np.pi * m / L * np.cos(2 * np.pi * m * s / L)
    assert np.max(np.abs(theta_s_from_theta(p) - exact)) < 1e-11


def test_filter_leaves_low_modes_and_endpoints():
    N = 256
    mult = filter_multiplier(N)
    assert mult[0] == 1.0
    assert np.all(np.abs(mult[:20] - 1.0) < 1e-15)
    assert mult[N // 2] < 1e-40
    p = smooth_profile(N=N)
    f = spectral_filter(p)
    assert f.theta[0] == p.theta_minus and f.theta[-1] == p.theta_plus
    # a band-limited field passes through untouched
    assert np.max(np.abs(f.theta - p.theta)) < 1e-13


def test_theta_minus_from_first_oscillation():
    # oscillation about -1 whose extrema sit on nodes
    s = np.linspace(-20.0, 0.0, 2001)
    theta = -1.0 + 0.2 * np.cos(np.pi * (s + 20.0) / 2.0 + np.pi)
    tm, mx, mn = estimate_theta_minus(s, theta)
    # first max at s = -18, first min at s = -16 (on nodes, node values taken as they are)
    assert mx[0] == pytest.approx(-18.0) and mn[0] == pytest.approx(-16.0)
    assert tm == pytest.approx(0.5 * (theta[200] + theta[400]), abs=1e-15)
    with pytest.raises(NoExtrema):
        estimate_theta_minus(s, s)


def test_parabolic_refinement_recovers_vertex():
    s = np.linspace(0.5, 10.0, 96)
    c = 2.03  # maximum off-node at c, minimum at c + pi
    tm, mx, mn = estimate_theta_minus(s, np.cos(s - c), refine=True)
    assert mx[0] == pytest.approx(c, abs=1e-3) and mx[1] == pytest.approx(1.0, abs=1e-5)
    assert mn[0] == pytest.approx(c + np.pi, abs=1e-3) and mn[1] == pytest.approx(-1.0, abs=1e-5)
    assert abs(tm) < 1e-5


def test_exponential_tail_contact():
    joint = JointInfo(s_joint=-2.0, theta_at_joint=-0.8, k_at_joint=0.3, index=10)
    s = np.linspace(-10.0, -2.0, 11)
    tail = exponential_tail(s, joint, -1.0)
    assert tail[-1] == pytest.approx(-0.8)
    h = 1e-6
    slope = (exponential_tail(np.array([-2.0]), joint, -1.0) - exponential_tail(np.array([-2.0 - h]), joint, -1.0)) / h
    assert slope[0] == pytest.approx(0.3, rel=1e-5)
    assert np.all(np.diff(tail) > 0) and tail[0] > -1.0
    full = append_exponential_tail(np.linspace(-10, 0, 21), np.zeros(21), JointInfo(-5.0, -0.8, 0.3, 10), -1.0)
    assert np.all(full[11:] == 0.0) and full[10] == pytest.approx(-0.8)


def test_joint_search_fails_cleanly():
    s = np.linspace(-5, 0, 11)
    with pytest.raises(NoJoint):
        find_joint(s, -np.ones(11), np.ones(11), 0.0, -5.0)


def test_assemble_grid_counts():
    s = np.linspace(-1.0, 1.0, 21)
    p = assemble_grid(s, np.zeros(21), 32, 6, 6, -0.5)
    assert p.N == 32 and p.delta_s == pytest.approx(0.1)
    assert p.node_index(0.0) == 16
    with pytest.raises(BadCount):
        assemble_grid(s, np.zeros(21), 32, 6, 5, -0.5)


def test_reference_build_geometry(exp1_build):
    b = exp1_build
    p = b.profile
    assert p.N == 4096
    assert p.delta_s == pytest.approx(0.05 * CUBE_ROOT_3, rel=1e-12)
    assert p.s_a == pytest.approx(-226.14, abs=0.01) and p.s_b == pytest.approx(69.23, abs=0.01)
    assert p.node_index(0.0) == b.profile.meta["origin_index"]
    assert p.theta[-1] == 0.0 and p.theta[0] == p.theta_minus
    # the curvature at the origin is 2 u0 / 3^(1/3)
    k = theta_s_from_theta(p)
    assert k[p.node_index(0.0)] == pytest.approx(2 * 0.72 / CUBE_ROOT_3, rel=1e-6)
