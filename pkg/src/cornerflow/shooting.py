"""Shooting for decaying solutions of u'' = x u - 2 u^3.

The profile ODE is integrated as the first-order system

    gamma' = u,   u' = v,   v' = x u - 2 u^3

with classical RK4 from x = 0 outward.  Solutions that do not decay as
x -> +inf settle onto one of the branches u ~ +-sqrt(x/2); the decaying
(admissible) ones form the boundary between the two basins and are
located by bisection.

Blow-up detection uses the oscillator energy

    E(x) = v^2/2 - x u^2/2 + u^4/2,    dE/dx = -u^2/2 <= 0.

For x > 0 the potential has a barrier of height 0 at u = 0, so once
E < 0 the solution can never cross zero again and its sign is final.
Decaying Airy-like tails keep E > 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import BadBracket, NoConvergence, NonFinite, NotAdmissible

DEFAULT_DX = 1e-5
ESCAPE_THRESHOLD = 1.0
BISECTION_MAX_ITER = 200

# _sweep status codes
_RUNNING_OUT = 0
_ESCAPED = 1
_NONFINITE = 2


@dataclass(frozen=True)
class InitialPair:
    """Initial datum (u(0), u'(0)) of the profile ODE."""

    u0: float
    v0: float

    def __post_init__(self):
        if not (math.isfinite(self.u0) and math.isfinite(self.v0)):
            raise ValueError(f"non-finite initial pair ({self.u0}, {self.v0})")

    def __neg__(self) -> InitialPair:
        return InitialPair(-self.u0, -self.v0)

    def as_tuple(self) -> tuple[float, float]:
        return (self.u0, self.v0)


@dataclass
class ProfileSolution:
    """Sampled trajectory (x, u, v, gamma) on an ascending uniform grid.

    ``step`` is the spacing between stored samples (``dx * stride``).
    ``x_cut`` is set once the parasitic growing tail has been replaced
    by zeros (see :func:`zero_tail`).
    """

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gamma: np.ndarray
    step: float
    pair: InitialPair | None = None
    x_cut: float | None = None

    def __post_init__(self):
        n = len(self.x)
        if not (len(self.u) == len(self.v) == len(self.gamma) == n):
            raise ValueError("ProfileSolution arrays must share one length")

    @property
    def origin_index(self) -> int:
        return int(np.argmin(np.abs(self.x)))


class Sign(enum.IntEnum):
    MinusInfinity = -1
    Undecided = 0
    PlusInfinity = 1


@dataclass(frozen=True)
class BlowupVerdict:
    sign: Sign
    x_escape: float | None = None
    nonfinite: bool = False

    def __post_init__(self):
        if (self.x_escape is None) != (self.sign == Sign.Undecided):
            raise ValueError("x_escape must be given iff the verdict is decided")

    def __neg__(self) -> BlowupVerdict:
        return BlowupVerdict(Sign(-int(self.sign)), self.x_escape, self.nonfinite)


@numba.njit(cache=True, nogil=True)
def _sweep(u0, v0, h, nsteps, stride, threshold, check):
    """RK4 sweep from x = 0 with step h (either sign).

    Stores every ``stride``-th state in rows (gamma, u, v).  Returns
    (states, steps_taken, escape_sign, status).
    """
    nstore = nsteps // stride + 1
    out = np.empty((nstore, 3))
    g = 0.0
    u = u0
    v = v0
    out[0, 0] = g
    out[0, 1] = u
    out[0, 2] = v
    k = 1
    for n in range(nsteps):
        x = n * h
        xm = x + 0.5 * h
        xe = (n + 1) * h
        k1g = u
        k1u = v
        k1v = x * u - 2.0 * u * u * u
        u2 = u + 0.5 * h * k1u
        v2 = v + 0.5 * h * k1v
        k2g = u2
        k2u = v2
        k2v = xm * u2 - 2.0 * u2 * u2 * u2
        u3 = u + 0.5 * h * k2u
        v3 = v + 0.5 * h * k2v
        k3g = u3
        k3u = v3
        k3v = xm * u3 - 2.0 * u3 * u3 * u3
        u4 = u + h * k3u
        v4 = v + h * k3v
        k4g = u4
        k4u = v4
        k4v = xe * u4 - 2.0 * u4 * u4 * u4
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (np.isfinite(u) and np.isfinite(v) and np.isfinite(g)):
            return out[:k], n + 1, 0.0, _NONFINITE
        if (n + 1) % stride == 0:
            out[k, 0] = g
            out[k, 1] = u
            out[k, 2] = v
            k += 1
        if check and xe > 0.0:
            energy = 0.5 * v * v - 0.5 * xe * u * u + 0.5 * u * u * u * u
            if energy < 0.0 and abs(u) > threshold:
                return out[:k], n + 1, np.sign(u), _ESCAPED
    return out[:k], nsteps, 0.0, _RUNNING_OUT


@numba.njit(cache=True, nogil=True)
def _escape_only(u0, v0, h, nsteps, threshold):
    # storage-free variant of _sweep for classification
    u = u0
    v = v0
    for n in range(nsteps):
        x = n * h
        xm = x + 0.5 * h
        xe = (n + 1) * h
        k1u = v
        k1v = x * u - 2.0 * u * u * u
        u2 = u + 0.5 * h * k1u
        v2 = v + 0.5 * h * k1v
        k2u = v2
        k2v = xm * u2 - 2.0 * u2 * u2 * u2
        u3 = u + 0.5 * h * k2u
        v3 = v + 0.5 * h * k2v
        k3u = v3
        k3v = xm * u3 - 2.0 * u3 * u3 * u3
        u4 = u + h * k3u
        v4 = v + h * k3v
        k4u = v4
        k4v = xe * u4 - 2.0 * u4 * u4 * u4
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (np.isfinite(u) and np.isfinite(v)):
            return 0.0, xe, _NONFINITE
        energy = 0.5 * v * v - 0.5 * xe * u * u + 0.5 * u * u * u * u
        if energy < 0.0 and abs(u) > threshold:
            return np.sign(u), xe, _ESCAPED
    return 0.0, nsteps * h, _RUNNING_OUT


def _as_pair(pair) -> InitialPair:
    if isinstance(pair, InitialPair):
        return pair
    u0, v0 = pair
    return InitialPair(float(u0), float(v0))


def _n_steps(length: float, dx: float) -> int:
    return int(round(abs(length) / dx))


def integrate_profile(
    pair,
    x_min: float,
    x_max: float,
    dx: float = DEFAULT_DX,
    *,
    stride: int = 1,
    escape_threshold: float = ESCAPE_THRESHOLD,
) -> ProfileSolution:
    """Integrate the (gamma, u, v) system on [x_min, x_max].

    Two RK4 sweeps start at x = 0.  The forward sweep stops early once
    the solution has escaped onto a branch; the backward sweep
    (oscillatory Airy regime) runs to ``x_min`` unchecked.

    Parameters
    ----------
    pair : InitialPair or (u0, v0)
    x_min, x_max : float
        Integration window, ``x_min <= 0 <= x_max``.
    dx : float
        RK4 step.
    stride : int
        Store every ``stride``-th step.  Long windows at dx = 1e-5 need
        this to stay within memory.

    Raises
    ------
    NonFinite
        If the state overflows before the escape test fires.
    """
    pair = _as_pair(pair)
    if dx <= 0:
        raise ValueError("dx must be positive")
    if not x_min <= 0 <= x_max:
        raise ValueError("need x_min <= 0 <= x_max")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    nf = _n_steps(x_max, dx)
    nb = _n_steps(x_min, dx)
    fw, _, _, status = _sweep(pair.u0, pair.v0, dx, nf, stride, escape_threshold, True)
    if status == _NONFINITE:
        raise NonFinite(f"forward sweep overflowed for {pair} (dx={dx} too large?)")
    bw, _, _, status = _sweep(pair.u0, pair.v0, -dx, nb, stride, escape_threshold, False)
    if status == _NONFINITE:
        raise NonFinite(f"backward sweep overflowed for {pair} (dx={dx} too large?)")

    step = dx * stride
    states = np.concatenate([bw[:0:-1], fw])
    idx = np.arange(-(len(bw) - 1), len(fw))
    x = idx * step
    return ProfileSolution(
        x=x,
        u=states[:, 1].copy(),
        v=states[:, 2].copy(),
        gamma=states[:, 0].copy(),
        step=step,
        pair=pair,
    )


def zero_tail(prof: ProfileSolution, x_max: float, *, tol: float = 1e-9) -> ProfileSolution:
    """Replace the parasitic growing tail by the exact decay u = 0.

    A double-precision admissible datum only delays the escape; the
    computed u shrinks to a zero crossing of order 1e-12 and then
    departs.  Everything right of the minimum of |u| on x > 0 is set to
    u = v = 0 with gamma frozen, and the grid is extended to ``x_max``.

    Raises
    ------
    NotAdmissible
        If the smallest |u| on x > 0 exceeds ``tol``.
    """
    pos = np.nonzero(prof.x > 0)[0]
    if len(pos) == 0:
        raise NotAdmissible("profile has no samples at x > 0")
    icut = pos[0] + int(np.argmin(np.abs(prof.u[pos])))
    if abs(prof.u[icut]) > tol:
        raise NotAdmissible(
            f"|u| never drops below {tol:g} on x > 0 (min {abs(prof.u[icut]):.3g} at x={prof.x[icut]:.4f})"
        )
    x_cut = prof.x[icut]
    step = prof.step
    i0 = int(round(prof.x[0] / step))
    i_end = max(int(round(x_max / step)), int(round(x_cut / step)))
    n = i_end - i0 + 1
    x = np.arange(i0, i_end + 1) * step
    u = np.zeros(n)
    v = np.zeros(n)
    gamma = np.full(n, prof.gamma[icut])
    u[: icut + 1] = prof.u[: icut + 1]
    v[: icut + 1] = prof.v[: icut + 1]
    gamma[: icut + 1] = prof.gamma[: icut + 1]
    u[icut] = 0.0
    v[icut] = 0.0
    return ProfileSolution(x=x, u=u, v=v, gamma=gamma, step=step, pair=prof.pair, x_cut=x_cut)


def classify_blowup(
    pair,
    x_max: float = 20.0,
    dx: float = DEFAULT_DX,
    *,
    escape_threshold: float = ESCAPE_THRESHOLD,
) -> BlowupVerdict:
    """Decide whether u -> +branch, -branch, or neither by ``x_max``."""
    pair = _as_pair(pair)
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    sign, x_esc, status = _escape_only(pair.u0, pair.v0, dx, _n_steps(x_max, dx), escape_threshold)
    if status == _NONFINITE:
        raise NonFinite(f"state overflowed for {pair} at x={x_esc:.6g}")
    if status == _ESCAPED:
        return BlowupVerdict(Sign(int(sign)), float(x_esc))
    return BlowupVerdict(Sign.Undecided)


def _bisect_segment(p_lo, p_hi, tol, x_max, dx, what):
    """Bisect the verdict sign change on the segment p_lo -> p_hi.

    ``tol`` bounds the final bracket length in the (u0, v0) plane.
    """
    p_lo = np.asarray(p_lo, dtype=float)
    p_hi = np.asarray(p_hi, dtype=float)
    s_lo = classify_blowup(tuple(p_lo), x_max, dx).sign
    s_hi = classify_blowup(tuple(p_hi), x_max, dx).sign
    if s_lo == Sign.Undecided or s_hi == Sign.Undecided or s_lo == s_hi:
        raise BadBracket(f"{what}: endpoint verdicts {s_lo.name}/{s_hi.name} do not bracket a sign change")
    for _ in range(BISECTION_MAX_ITER):
        if np.hypot(*(p_hi - p_lo)) <= tol:
            return p_lo, p_hi
        mid = 0.5 * (p_lo + p_hi)
        if np.array_equal(mid, p_lo) or np.array_equal(mid, p_hi):
            return p_lo, p_hi
        s_mid = classify_blowup(tuple(mid), x_max, dx).sign
        if s_mid == s_lo:
            p_lo = mid
        elif s_mid == s_hi:
            p_hi = mid
        else:
            # an undecided midpoint sits on the admissible curve itself
            return mid, mid
    raise NoConvergence(f"{what}: bisection cap of {BISECTION_MAX_ITER} iterations reached")


def find_admissible_v0(
    u0: float,
    v_lo: float,
    v_hi: float,
    tol: float = 1e-12,
    x_max: float = 20.0,
    dx: float = DEFAULT_DX,
) -> float:
    """Bisect on u'(0) for the datum whose solution decays.

    Returns the midpoint of a bracket of width <= ``tol`` (or of the
    last representable bracket) across which the escape sign flips.
    """
    if u0 == 0.0 and v_lo <= 0.0 <= v_hi:
        # the zero solution is exactly admissible
        return 0.0
    lo, hi = _bisect_segment((u0, v_lo), (u0, v_hi), tol, x_max, dx, f"u0={u0!r}")
    return float(0.5 * (lo[1] + hi[1]))


def find_admissible_on_segment(p_lo, p_hi, tol: float = 1e-12, x_max: float = 20.0, dx: float = DEFAULT_DX) -> InitialPair:
    """Admissible pair on an arbitrary segment with opposite verdicts at its ends."""
    lo, hi = _bisect_segment(p_lo, p_hi, tol, x_max, dx, f"segment {tuple(p_lo)}->{tuple(p_hi)}")
    mid = 0.5 * (lo + hi)
    return InitialPair(float(mid[0]), float(mid[1]))


def _expanding_bracket(u0, center, width, x_max, dx, max_expand=20):
    lo, hi = center - width, center + width
    for _ in range(max_expand + 1):
        s_lo = classify_blowup((u0, lo), x_max, dx).sign
        s_hi = classify_blowup((u0, hi), x_max, dx).sign
        if s_lo != Sign.Undecided and s_hi != Sign.Undecided and s_lo != s_hi:
            return lo, hi
        width *= 2.0
        lo, hi = center - width, center + width
    raise BadBracket(f"no sign change around v0={center!r} for u0={u0!r}", u0=u0)


def trace_admissible_curve(
    u0_samples: Sequence[float],
    seed_bracket: tuple[float, float],
    tol: float = 1e-12,
    x_max: float = 20.0,
    dx: float = DEFAULT_DX,
) -> list[InitialPair]:
    """Follow the admissible curve as a graph v0(u0) by continuation.

    The first sample uses ``seed_bracket``; later ones re-centre on the
    previous v0 with half-width ``10 * tol`` and double it until the
    verdicts differ.
    """
    out: list[InitialPair] = []
    prev = None
    for u0 in u0_samples:
        u0 = float(u0)
        try:
            if prev is None:
                lo, hi = seed_bracket
            else:
                lo, hi = _expanding_bracket(u0, prev, 10.0 * tol, x_max, dx)
            v0 = find_admissible_v0(u0, lo, hi, tol, x_max, dx)
        except BadBracket as exc:
            raise BadBracket(f"tracing failed at u0={u0!r}: {exc}", u0=u0) from exc
        out.append(InitialPair(u0, v0))
        prev = v0
    return out


# tangent of the admissible curve at the origin: the decaying Airy solution
AIRY_SLOPE = -0.7290111329472271  # Ai'(0) / Ai(0)


def trace_admissible_arclength(
    n_points: int,
    step: float = 0.05,
    *,
    start=(0.0, 0.0),
    direction=(1.0, AIRY_SLOPE),
    tol: float = 1e-11,
    x_max: float = 20.0,
    dx: float = DEFAULT_DX,
) -> list[InitialPair]:
    """Follow the admissible curve by arc length in the (u0, v0) plane.

    Each new point is predicted along the current chord and corrected
    by bisection on the normal through the prediction.  This follows
    the curve through its folds, where it is no longer a graph over u0.
    """
    pts = [np.asarray(start, dtype=float)]
    tangent = np.asarray(direction, dtype=float)
    tangent /= np.hypot(*tangent)
    out = [InitialPair(*map(float, pts[0]))]
    for _ in range(n_points - 1):
        pred = pts[-1] + step * tangent
        normal = np.array([-tangent[1], tangent[0]])
        width = 0.25 * step
        for _ in range(12):
            a, b = pred - width * normal, pred + width * normal
            sa = classify_blowup(tuple(a), x_max, dx).sign
            sb = classify_blowup(tuple(b), x_max, dx).sign
            if Sign.Undecided not in (sa, sb) and sa != sb:
                break
            width *= 1.5
        else:
            raise BadBracket(f"lost the admissible curve near {tuple(pred)}")
        p = find_admissible_on_segment(a, b, tol, x_max, dx)
        q = np.array(p.as_tuple())
        chord = q - pts[-1]
        tangent = chord / np.hypot(*chord)
        pts.append(q)
        out.append(p)
    return out


@dataclass
class RegionRaster:
    u0: np.ndarray
    v0: np.ndarray
    verdict: np.ndarray  # int8, shape (len(v0), len(u0)); +1, -1 or 0
    nonfinite: np.ndarray = field(default=None)


def classify_region(
    u0_range: tuple[float, float],
    v0_range: tuple[float, float],
    grid: tuple[int, int],
    x_max: float = 20.0,
    dx: float = DEFAULT_DX,
) -> RegionRaster:
    """Blow-up verdicts on a cell-centred grid over a rectangle.

    Overflowing cells are recorded as undecided and flagged in
    ``nonfinite``.
    """
    nu, nv = grid
    if nu <= 0 or nv <= 0:
        raise ValueError("grid counts must be positive")
    us = _cell_centres(u0_range, nu)
    vs = _cell_centres(v0_range, nv)
    verdict = np.zeros((nv, nu), dtype=np.int8)
    flag = np.zeros((nv, nu), dtype=bool)
    nsteps = _n_steps(x_max, dx)
    for j, v0 in enumerate(vs):
        for i, u0 in enumerate(us):
            sign, _, status = _escape_only(u0, v0, dx, nsteps, ESCAPE_THRESHOLD)
            verdict[j, i] = int(sign)
            flag[j, i] = status == _NONFINITE
    return RegionRaster(us, vs, verdict, flag)


def _cell_centres(rng, n):
    lo, hi = rng
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5)
