from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cornerflow import AngleProfile, build_experiment

settings.register_profile("cornerflow", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cornerflow")


@pytest.fixture(scope="session")
def exp1_build():
    """Reference experiment on the smallest grid (N = 4096), built once per session."""
    return build_experiment("exp1")


def smooth_profile(N=64, L=10.0, jump=0.7, amp=0.3, modes=(1, 2), s_a=-4.0, t=1.0) -> AngleProfile:
    """Ramp plus a few low Fourier modes that vanish at both ends (band-limited periodized part)."""
    s = s_a + L * np.arange(N + 1) / N
    x = (s - s_a) / L
    theta = -jump / 2 + jump * x
    for m in modes:
        theta = theta + amp / m * (np.cos(2 * np.pi * m * x) - 1.0)
    return AngleProfile(s_a=s_a, s_b=s_a + L, theta=theta, theta_minus=-jump / 2, theta_plus=jump / 2, t=t)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
