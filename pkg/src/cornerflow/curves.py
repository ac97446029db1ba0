"""Curves from angles: reconstruction, anchoring, loop closure, area, point tracking.

A curve parametrised by arc length satisfies z_s = exp(i theta).  The
reconstruction integrates exp(i theta) spectrally; the closure
construction appends a smooth turning loop of total angle
2 pi - (theta^+ - theta^-) and tunes its two shape parameters until the
curve closes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .errors import BadBracket, BadProfile
from .profile import CUBE_ROOT_3, AngleProfile
from .shooting import InitialPair
from .spectral import EvolutionConfig, evolve

log = logging.getLogger(__name__)

INNER_TOL = 1e-11
OUTER_TOL = 1e-10
MAX_BISECTIONS = 200
_GAUSS_POINTS = 6


@dataclass
class CurveSamples:
    """Curve samples z(s_j) with the exact unit tangent exp(i theta(s_j))."""

    s: np.ndarray
    z: np.ndarray
    t: float
    tangent: np.ndarray | None = None

    @property
    def delta_s(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def gap(self) -> complex:
        return complex(self.z[-1] - self.z[0])

    def rotated(self, factor: complex, about: complex = 0.0) -> CurveSamples:
        tan = None if self.tangent is None else self.tangent * factor
        return CurveSamples(self.s, about + (self.z - about) * factor, self.t, tan)

    def translated(self, offset: complex) -> CurveSamples:
        return CurveSamples(self.s, self.z + offset, self.t, self.tangent)


@dataclass(frozen=True)
class ClosureParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")


def _ramp_antiderivative(g: np.ndarray, c: float, L: float) -> np.ndarray:
    """Antiderivative from s_a of exp(i c (s - s_a)) g(s) at the N + 1 nodes, g periodic.

    Each Fourier mode of g meets the ramp exponential in a single
    exponential exp(i w s) with w = c + 2 pi xi / L, integrated exactly.
    A mode with w L below roundoff (closed curves) integrates to a
    linear term.
    """
    N = len(g)
    a = sfft.fft(g) / N
    xi = np.fft.fftfreq(N, 1.0 / N)
    w = c + 2.0 * np.pi * xi / L
    resonant = np.abs(w) * L < 1e-9
    coef = np.where(resonant, 0.0, a / np.where(resonant, 1.0, 1j * w))
    j = np.arange(N + 1)
    x = j / N
    # sum_k coef_k exp(2 pi i xi_k j / N); the node j = N repeats j = 0
    periodic = sfft.ifft(coef) * N
    periodic = np.append(periodic, periodic[0])
    z = np.exp(1j * c * L * x) * periodic - coef.sum()
    if np.any(resonant):
        z = z + a[resonant].sum() * L * x
    return z


def reconstruct_curve(profile: AngleProfile, anchor: tuple[float, complex] | None = None) -> CurveSamples:
    """Integrate z_s = exp(i theta) on the profile grid.

    theta is split into its linear ramp and the periodic remainder
    theta~; exp(i theta~) is expanded in Fourier modes and every mode is
    integrated exactly against the ramp exponential, so the result is
    spectrally accurate whatever the curvature at the ends.
    ``anchor = (s*, z*)`` translates the result so that z(s*) = z*;
    s* must be a grid node.  Default: z(s_a) = 0.
    """
    s = profile.s
    f = np.exp(1j * profile.theta)
    g = np.exp(1j * profile.periodized()[:-1])
    z = np.exp(1j * profile.theta_minus) * _ramp_antiderivative(g, profile.jump / profile.L, profile.L)
    z[0] = 0.0
    curve = CurveSamples(s=s, z=z, t=profile.t, tangent=f)
    if anchor is not None:
        s_star, z_star = anchor
        j = profile.node_index(s_star)
        if j is None:
            raise ValueError(f"anchor s* = {s_star} is not a grid node")
        curve = curve.translated(z_star - z[j])
    return curve


def anchor_z0(t: float, pair: InitialPair | tuple[float, float], z_s_at_0: complex) -> complex:
    """Position of the self-similar curve at s = 0: -2 (3t)^(1/3) (i v0 + u0^2) z_s(0)."""
    if t <= 0:
        raise ValueError("t must be positive")
    u0, v0 = pair.as_tuple() if isinstance(pair, InitialPair) else pair
    return -2.0 * CUBE_ROOT_3 * t ** (1.0 / 3.0) * (1j * v0 + u0 * u0) * z_s_at_0


def bump(x, params: ClosureParams):
    """psi(x) = exp(-beta / ((x - alpha)(1 - x))) on (alpha, 1), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    a, b = params.alpha, params.beta
    out = np.zeros_like(x)
    inside = (x > a) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(-b / ((xi - a) * (1.0 - xi)))
    return out if out.ndim else float(out)


def bump_primitive(s: float, params: ClosureParams, epsabs: float = 1e-13) -> float:
    """Psi(s) = integral of psi from 0 to s, by adaptive quadrature."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if s <= params.alpha:
        return 0.0
    val, _ = integrate.quad(lambda x: bump(x, params), params.alpha, s, epsabs=epsabs, epsrel=1e-13, limit=400)
    return val


def bump_primitive_grid(n: int, params: ClosureParams) -> np.ndarray:
    """Psi at x_j = j / n, j = 0..n, by Gauss-Legendre on each cell, summed."""
    g, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    h = 1.0 / n
    left = np.arange(n) * h
    pts = left[:, None] + 0.5 * h * (g[None, :] + 1.0)
    cells = 0.5 * h * (bump(pts.ravel(), params).reshape(n, -1) @ w)
    return np.concatenate(([0.0], np.cumsum(cells)))


def extend_theta_with_loop(profile: AngleProfile, params: ClosureParams) -> AngleProfile:
    """Append a smooth turning loop on [s_b, s_b + 3L] so the total turning is 2 pi.

    The new profile has 4N + 1 nodes on the same spacing,
    theta_minus unchanged and theta_plus = theta_minus + 2 pi.
    """
    if profile.theta[-1] != 0.0:
        raise BadProfile(f"theta(s_b) = {profile.theta[-1]:.3g}; the loop needs theta(s_b) = 0")
    N = profile.N
    psi_cum = bump_primitive_grid(3 * N, params)
    amplitude = 2.0 * np.pi + profile.theta[0]
    loop = amplitude * psi_cum / psi_cum[-1]
    theta = np.concatenate((profile.theta, loop[1:]))
    meta = dict(profile.meta)
    meta.update(alpha=params.alpha, beta=params.beta, base_N=N)
    return AngleProfile(
        s_a=profile.s_a,
        s_b=profile.s_a + 4 * profile.L,
        theta=theta,
        theta_minus=profile.theta[0],
        theta_plus=profile.theta[0] + 2.0 * np.pi,
        t=profile.t,
        pair=profile.pair,
        meta=meta,
    )


def endpoint_gap(profile: AngleProfile) -> complex:
    """z(s_b) for the curve rotated to z_s(s_a) = 1 and anchored at z(s_a) = 0.

    Trapezoid sum of exp(i (theta - theta(s_a))).  It agrees with the end
    value of :func:`reconstruct_curve` to O(delta_s^2) times the
    curvature difference between the ends, and spectrally when the
    curvature vanishes there, as on padded profiles.
    """
    f = np.exp(1j * (profile.theta - profile.theta[0]))
    return complex(profile.delta_s * (f.sum() - 0.5 * (f[0] + f[-1])))


@dataclass
class ClosureResult:
    params: ClosureParams
    residual: complex
    profile: AngleProfile
    log: list[tuple[float, float, float, float]] = field(default_factory=list)


def _bisect(fun, lo, hi, tol, level, max_iter=MAX_BISECTIONS):
    f_lo, f_hi = fun(lo), fun(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BadBracket(f"{level} bracket [{lo}, {hi}] has no sign change ({f_lo:.3g}, {f_hi:.3g})", level=level)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fun(mid)
        if abs(f_mid) <= tol:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo if abs(f_lo) <= abs(f_hi) else hi


def solve_beta(
    profile: AngleProfile,
    alpha: float,
    beta_bracket=(0.5, 20.0),
    tol: float = INNER_TOL,
    log_rows: list | None = None,
) -> tuple[float, complex]:
    """Inner bisection: beta with Im z(s_b) = 0 for fixed alpha."""
    rows = [] if log_rows is None else log_rows
    cache = {}

    def gap(beta):
        g = endpoint_gap(extend_theta_with_loop(profile, ClosureParams(alpha, beta)))
        cache[beta] = g
        rows.append((alpha, beta, g.real, g.imag))
        return g.imag

    L_total = 4 * profile.L
    beta = _bisect(gap, *beta_bracket, tol * L_total, "inner")
    if beta not in cache:
        gap(beta)
    return beta, cache[beta]


def close_curve(
    profile: AngleProfile,
    alpha_bracket=(0.1, 0.2),
    beta_bracket=(0.5, 20.0),
    inner_tol: float = INNER_TOL,
    outer_tol: float = OUTER_TOL,
) -> ClosureResult:
    """Nested bisection on (alpha, beta) until z(s_b) = z(s_a) after rotation."""
    rows: list = []
    found = {}

    def outer(alpha):
        beta, g = solve_beta(profile, alpha, beta_bracket, inner_tol, rows)
        found[alpha] = (beta, g)
        return g.real

    L_total = 4 * profile.L
    alpha = _bisect(outer, *alpha_bracket, outer_tol * L_total, "outer")
    if alpha not in found:
        outer(alpha)
    beta, g = found[alpha]
    params = ClosureParams(alpha, beta)
    closed = extend_theta_with_loop(profile, params)
    log.info("closure alpha=%.15g beta=%.15g gap=%s", alpha, beta, g)
    return ClosureResult(params, g, closed, rows)


def enclosed_area(curve: CurveSamples) -> float:
    """1/2 of the loop integral of x dy - y dx, trapezoid rule on the grid.

    Uses the exact tangent when available; otherwise the chord shoelace.
    """
    if curve.tangent is None:
        z = curve.z
        return 0.5 * float(np.sum((np.conj(z[:-1]) * z[1:]).imag))
    integrand = (np.conj(curve.z) * curve.tangent).imag
    return 0.5 * curve.delta_s * float(integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))


def segments_intersect(z: np.ndarray, stride: int = 1) -> bool:
    """Brute-force check for a crossing between non-adjacent chords of ``z[::stride]``."""
    p = np.asarray(z)[::stride]
    a, b = p[:-1], p[1:]
    d = b - a
    n = len(a)
    for i in range(n - 2):
        j = np.arange(i + 2, n)
        if i == 0 and abs(p[-1] - p[0]) < 1e-12:
            j = j[j != n - 1]
        if len(j) == 0:
            continue
        cross = lambda u, v: (np.conj(u) * v).imag  # noqa: E731
        d1 = cross(d[i], a[j] - a[i])
        d2 = cross(d[i], b[j] - a[i])
        d3 = cross(d[j], a[i] - a[j])
        d4 = cross(d[j], b[i] - a[j])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


def point_rhs(theta: float, th_s: float, th_ss: float, th_sss: float) -> tuple[float, complex]:
    """(theta_t, z_t) at a material point: -theta_sss - theta_s^3 / 2 and exp(i theta)(-i theta_ss - theta_s^2 / 2)."""
    return -th_sss - 0.5 * th_s**3, np.exp(1j * theta) * (-1j * th_ss - 0.5 * th_s * th_s)


class _PointProbe:
    """Spectral derivatives of theta~ at one grid node from half-spectrum coefficients."""

    def __init__(self, N: int, L: float, j0: int, c: float):
        xi = np.arange(N // 2 + 1)
        self.N = N
        self.c = c
        weight = np.full(N // 2 + 1, 2.0)
        weight[0] = 1.0
        weight[-1] = 1.0
        phase = np.exp(2j * np.pi * xi * j0 / N) * weight / N
        ik = 2j * np.pi * xi / L
        odd_mask = np.ones(N // 2 + 1)
        odd_mask[-1] = 0.0  # the Nyquist mode has no odd derivative on a real grid
        self.rows = (phase, phase * ik * odd_mask, phase * ik * ik, phase * ik**3 * odd_mask)

    def derivatives(self, hat: np.ndarray):
        return tuple(float(np.dot(r, hat).real) for r in self.rows)


@dataclass
class TrackResult:
    s0: float
    samples: list[tuple[float, float, complex]]
    final: AngleProfile


def track_point(
    profile: AngleProfile,
    config: EvolutionConfig,
    s0: float | None = None,
    z_start: complex | None = None,
    cadence: int | None = None,
) -> TrackResult:
    """Follow theta(s0, t) and z(s0, t) along the evolution with the same RK4 stages.

    ``z_start`` defaults to the reconstructed curve at s0 anchored at
    z(s_a) = 0.  Under the ``shift`` pinning rule the field is rotated by
    the removed endpoint value every step; the tracked point is rotated
    with it about the origin.
    """
    if config.transform != "real":
        raise ValueError("point tracking runs on the real-transform stepper")
    s0 = profile.s_a if s0 is None else s0
    j0 = profile.node_index(s0)
    if j0 is None:
        raise ValueError(f"s0 = {s0} is not a grid node")
    if z_start is None:
        z_start = reconstruct_curve(profile).z[j0]
    probe = _PointProbe(profile.N, profile.L, j0, profile.jump / profile.L)
    ramp0 = profile.theta_minus + profile.jump * j0 / profile.N
    state = {"theta": float(profile.theta[j0]), "z": complex(z_start), "n": 0}
    every = cadence or config.cadence
    samples = [(config.t_start, state["theta"], state["z"])]
    dt = config.dt

    def rhs_at(hat, theta_pt):
        _, d1, d2, d3 = probe.derivatives(hat)
        return point_rhs(theta_pt, d1 + probe.c, d2, d3)

    def on_step(stepper, stages, t, pre):
        th, z = state["theta"], state["z"]
        k1 = rhs_at(stages[0], th)
        k2 = rhs_at(stages[1], th + 0.5 * dt * k1[0])
        k3 = rhs_at(stages[2], th + 0.5 * dt * k2[0])
        k4 = rhs_at(stages[3], th + dt * k3[0])
        th = th + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z = z + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if stepper.pin == "shift":
            th -= pre
            z *= np.exp(-1j * pre)
        elif j0 in (0, profile.N):
            th = ramp0
        state["theta"], state["z"] = th, z
        state["n"] += 1
        if state["n"] % every == 0 or state["n"] == config.n_steps:
            samples.append((t + dt, th, z))

    result = evolve(profile, config, on_step=on_step)
    return TrackResult(s0=s0, samples=samples, final=result.final)
