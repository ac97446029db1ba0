"""Observables of an evolving angle profile and the curvature-integral scan."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .curves import endpoint_gap, enclosed_area, reconstruct_curve
from .errors import CornerFlowError, NodeMissing
from .profile import CUBE_ROOT_3, AngleProfile, estimate_theta_minus, theta_from_profile, theta_s_from_theta, working_grid
from .shooting import InitialPair, integrate_profile, zero_tail

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 0.1
# Pairs located to machine precision still carry a growing component of
# relative size ~1e-16, which floors min |u| on x > 0 near 1e-8.
SCAN_TAIL_TOL = 1e-7


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    k0: float | None = None
    k0_exact: float | None = None
    closure_error: float | None = None
    area: float | None = None
    support_width: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _k(profile: AngleProfile) -> np.ndarray:
    return theta_s_from_theta(profile)


def energy(profile: AngleProfile) -> float:
    """Trapezoid quadrature of k^2 over [s_a, s_b]."""
    k = _k(profile)
    k2 = k * k
    return float(profile.delta_s * (k2.sum() - 0.5 * (k2[0] + k2[-1])))


def k0_exact(t: float, u0: float) -> float:
    """Curvature at s = 0 of the self-similar solution: 2 u0 / (3t)^(1/3)."""
    return 2.0 * u0 / (CUBE_ROOT_3 * t ** (1.0 / 3.0))


def curvature_origin(profile: AngleProfile, u0: float | None = None) -> tuple[float, float | None]:
    """(k(0, t) read at the node s = 0, exact self-similar value)."""
    j = profile.node_index(0.0)
    if j is None:
        raise NodeMissing("s = 0 is not a node of this grid")
    if u0 is None and profile.pair is not None:
        u0 = profile.pair.u0
    exact = None if u0 is None else k0_exact(profile.t, u0)
    return float(_k(profile)[j]), exact


def support_width(profile: AngleProfile, threshold: float = SUPPORT_THRESHOLD) -> float:
    """s-measure of the nodes where |k| exceeds ``threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    k = _k(profile)[:-1]
    return float(np.count_nonzero(np.abs(k) > threshold) * profile.delta_s)


class DiagnosticsObserver:
    """Observer for :func:`cornerflow.spectral.evolve` producing DiagnosticsRecord rows.

    ``closed=True`` adds the closure gap |z(s_b) - z(s_a)| and the
    enclosed area.
    """

    def __init__(self, u0: float | None = None, *, closed: bool = False, threshold: float = SUPPORT_THRESHOLD):
        self.u0 = u0
        self.closed = closed
        self.threshold = threshold

    def __call__(self, t: float, profile: AngleProfile) -> DiagnosticsRecord:
        k = _k(profile)
        k2 = k * k
        rec = DiagnosticsRecord(t=t, energy=float(profile.delta_s * (k2.sum() - 0.5 * (k2[0] + k2[-1]))))
        j = profile.node_index(0.0)
        if j is not None:
            rec.k0 = float(k[j])
            if self.u0 is not None:
                rec.k0_exact = k0_exact(t, self.u0)
        rec.support_width = float(np.count_nonzero(np.abs(k[:-1]) > self.threshold) * profile.delta_s)
        if self.closed:
            rec.closure_error = abs(endpoint_gap(profile))
            rec.area = enclosed_area(reconstruct_curve(profile))
        return rec


def summarize(records: Sequence[DiagnosticsRecord]) -> dict:
    """min / max / relative drift of every observable present in the stream."""
    out = {}
    if not records:
        return out
    for name in ("energy", "k0", "closure_error", "area", "support_width"):
        vals = np.array([getattr(r, name) for r in records if getattr(r, name) is not None], dtype=float)
        if len(vals) == 0:
            continue
        ref = vals[0]
        drift = float((vals.max() - vals.min()) / abs(ref)) if ref != 0 else float(vals.max() - vals.min())
        out[name] = {"min": float(vals.min()), "max": float(vals.max()), "first": float(ref), "last": float(vals[-1]), "drift": drift}
    out["t_first"] = records[0].t
    out["t_last"] = records[-1].t
    return out


def relative_drift(values: Iterable[float]) -> float:
    v = np.asarray(list(values), dtype=float)
    return float((v.max() - v.min()) / abs(v[0]))


def linear_fit_r2(x, y) -> tuple[float, float, float]:
    """Least-squares line y = a x + b and its coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), float(r2)


def rescale_self_similar(s: np.ndarray, z: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(sigma, Z) = (s t^(-1/3), z t^(-1/3)); self-similar curves collapse onto one shape."""
    c = t ** (-1.0 / 3.0)
    return np.asarray(s) * c, np.asarray(z) * c


@dataclass
class IntegralScanRow:
    pair: InitialPair
    integral: float | None
    error: str | None = None


def curvature_integral(
    pair: InitialPair | tuple[float, float],
    x_min: float = -80.0,
    x_max: float = 20.0,
    dx: float = 1e-5,
    tail_tol: float = SCAN_TAIL_TOL,
) -> float:
    """theta^+ - theta^- for one admissible pair (theta^+ = 0, theta^- from the first oscillation)."""
    pair = pair if isinstance(pair, InitialPair) else InitialPair(*pair)
    if pair.u0 == 0.0 and pair.v0 == 0.0:
        return 0.0
    prof = zero_tail(integrate_profile(pair, x_min, x_max, dx, stride=10), x_max, tol=tail_tol)
    work = working_grid(theta_from_profile(prof, tail_tol=tail_tol))
    left = work.s < 0
    theta_minus, _, _ = estimate_theta_minus(work.s[left], work.theta[left])
    return -theta_minus


def scan_curvature_integral(
    pairs: Iterable[InitialPair | tuple[float, float]],
    x_min: float = -80.0,
    x_max: float = 20.0,
    dx: float = 1e-5,
    workers: int | None = None,
    tail_tol: float = SCAN_TAIL_TOL,
) -> list[IntegralScanRow]:
    """Curvature integral for each pair; failures are recorded per row and the scan continues."""
    pairs = [p if isinstance(p, InitialPair) else InitialPair(*p) for p in pairs]

    def one(p):
        try:
            return IntegralScanRow(p, curvature_integral(p, x_min, x_max, dx, tail_tol))
        except CornerFlowError as exc:
            log.warning("scan: %s at %s", type(exc).__name__, p)
            return IntegralScanRow(p, None, f"{type(exc).__name__}: {exc}")

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, pairs))
    return [one(p) for p in pairs]
