"""Self-similar corner flows of the curve-diffusion equation.

Shooting for admissible data of the profile ODE, construction of the
initial tangent-angle profile, pseudo-spectral evolution of the angle
equation, curve reconstruction and closure, and diagnostics.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .curves import (
    ClosureParams,
    ClosureResult,
    CurveSamples,
    close_curve,
    enclosed_area,
    endpoint_gap,
    extend_theta_with_loop,
    reconstruct_curve,
    solve_beta,
    track_point,
)
from .diagnostics import (
    DiagnosticsObserver,
    DiagnosticsRecord,
    curvature_integral,
    energy,
    scan_curvature_integral,
    summarize,
    support_width,
)
from .errors import CornerFlowError
from .experiments import EXPERIMENTS, REFERENCE_PAIR, build_experiment
from .profile import AngleProfile, build_profile, estimate_theta_minus, spectral_filter
from .shooting import (
    InitialPair,
    ProfileSolution,
    Sign,
    classify_blowup,
    classify_region,
    find_admissible_v0,
    integrate_profile,
    trace_admissible_arclength,
    zero_tail,
)
from .spectral import IFRK4, EvolutionConfig, evolve

__all__ = [
    "AngleProfile",
    "ClosureParams",
    "ClosureResult",
    "CornerFlowError",
    "CurveSamples",
    "DiagnosticsObserver",
    "DiagnosticsRecord",
    "EXPERIMENTS",
    "EvolutionConfig",
    "IFRK4",
    "InitialPair",
    "ProfileSolution",
    "REFERENCE_PAIR",
    "Sign",
    "build_experiment",
    "build_profile",
    "classify_blowup",
    "classify_region",
    "close_curve",
    "curvature_integral",
    "enclosed_area",
    "endpoint_gap",
    "energy",
    "estimate_theta_minus",
    "evolve",
    "extend_theta_with_loop",
    "find_admissible_v0",
    "integrate_profile",
    "reconstruct_curve",
    "scan_curvature_integral",
    "solve_beta",
    "spectral_filter",
    "summarize",
    "support_width",
    "trace_admissible_arclength",
    "track_point",
    "zero_tail",
]
