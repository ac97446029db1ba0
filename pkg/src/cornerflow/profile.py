"""Construction of the initial angle theta(s, 1) from an admissible profile.

Pipeline: ODE profile -> theta on the self-similar variable s = 3^(1/3) x
-> limit theta^- from the first oscillation -> exponential tail glued
at the joint -> padding to 2^n + 1 nodes -> smooth spectral filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadCount, NoExtrema, NoJoint, NotAdmissible
from .shooting import InitialPair, ProfileSolution

CUBE_ROOT_3 = 3.0 ** (1.0 / 3.0)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass
class AngleProfile:
    """Angle field on the uniform grid s_j = s_a + j * delta_s, j = 0..N.

    ``theta`` holds N + 1 values with theta[0] = theta_minus and
    theta[N] = theta_plus.
    """

    s_a: float
    s_b: float
    theta: np.ndarray
    theta_minus: float
    theta_plus: float
    t: float = 1.0
    pair: InitialPair | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not _is_power_of_two(self.N):
            raise BadCount(f"N = {self.N} is not a power of two")

    @property
    def N(self) -> int:
        return len(self.theta) - 1

    @property
    def n_points(self) -> int:
        return len(self.theta)

    @property
    def L(self) -> float:
        return self.s_b - self.s_a

    @property
    def delta_s(self) -> float:
        return self.L / self.N

    @property
    def s(self) -> np.ndarray:
        return self.s_a + np.arange(self.N + 1) * self.delta_s

    @property
    def jump(self) -> float:
        return self.theta_plus - self.theta_minus

    def ramp(self) -> np.ndarray:
        return self.theta_minus + self.jump * np.arange(self.N + 1) / self.N

    def periodized(self) -> np.ndarray:
        """theta minus its linear ramp; vanishes at both ends."""
        return self.theta - self.ramp()

    @classmethod
    def from_periodized(cls, tilde: np.ndarray, like: AngleProfile, **changes) -> AngleProfile:
        prof = replace(like, theta=np.asarray(tilde, dtype=float) + like.ramp(), **changes)
        prof.theta[0] = prof.theta_minus
        prof.theta[-1] = prof.theta_plus
        return prof

    def node_index(self, s0: float, rtol: float = 1e-6) -> int | None:
        j = int(round((s0 - self.s_a) / self.delta_s))
        if 0 <= j <= self.N and abs(self.s_a + j * self.delta_s - s0) <= rtol * self.delta_s:
            return j
        return None


@dataclass(frozen=True)
class JointInfo:
    s_joint: float
    theta_at_joint: float
    k_at_joint: float
    index: int


@dataclass
class RawTheta:
    """theta(s, 1) straight from the ODE, before any correction.

    ``s`` / ``theta`` / ``k`` live on the stored ODE samples (fine);
    the working grid is laid down separately by :func:`working_grid`.
    """

    s: np.ndarray
    theta: np.ndarray
    k: np.ndarray
    prof: ProfileSolution


def theta_from_profile(prof: ProfileSolution, *, tail_tol: float = 1e-9) -> RawTheta:
    """theta(s, 1) = 2 gamma(s / 3^(1/3)) + const with theta at the right end set to 0.

    ``prof`` must already carry the decayed tail (see
    :func:`cornerflow.shooting.zero_tail`); curvature samples
    k(s, 1) = (2 / 3^(1/3)) u are returned alongside.
    """
    if abs(prof.u[-1]) > tail_tol:
        raise NotAdmissible(f"|u| = {abs(prof.u[-1]):.3g} at the right end; profile did not decay")
    s = CUBE_ROOT_3 * prof.x
    theta = 2.0 * (prof.gamma - prof.gamma[-1])
    k = (2.0 / CUBE_ROOT_3) * prof.u
    return RawTheta(s=s, theta=theta, k=k, prof=prof)


def _parabolic_vertex(s, y, i):
    # vertex of the parabola through samples i-1, i, i+1 (uniform spacing)
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return s[i], y1
    off = 0.5 * (y0 - y2) / denom
    h = s[i + 1] - s[i]
    return s[i] + off * h, y1 - 0.25 * (y0 - y2) * off


def estimate_theta_minus(s: np.ndarray, theta: np.ndarray, *, refine: bool = False):
    """Limit of theta at the left end from its first oscillation.

    The first interior local maximum and minimum (three-point test on
    the samples) are averaged.  The node values are used as they are;
    ``refine=True`` replaces each by the vertex of the parabola through
    its neighbours.

    Returns
    -------
    theta_minus : float
    first_max, first_min : (s, theta) tuples
    """
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = np.diff(theta)
    first_max = first_min = None
    for i in range(1, len(theta) - 1):
        if first_max is None and d[i - 1] > 0 and d[i] <= 0:
            first_max = _parabolic_vertex(s, theta, i) if refine else (s[i], theta[i])
        elif first_min is None and d[i - 1] < 0 and d[i] >= 0:
            first_min = _parabolic_vertex(s, theta, i) if refine else (s[i], theta[i])
        if first_max is not None and first_min is not None:
            break
    if first_max is None or first_min is None:
        raise NoExtrema("no interior maximum/minimum pair found; extend the domain to the left")
    first_max = (float(first_max[0]), float(first_max[1]))
    first_min = (float(first_min[0]), float(first_min[1]))
    return 0.5 * (first_max[1] + first_min[1]), first_max, first_min


@dataclass
class WorkingGrid:
    s: np.ndarray
    theta: np.ndarray
    k: np.ndarray
    delta_s: float
    origin_index: int


def working_grid(raw: RawTheta, n_intervals: int | None = None, x_spacing: float = 0.05) -> WorkingGrid:
    """Lay a uniform grid over the whole raw domain with 0 as a node.

    By default the node spacing in x is ``x_spacing`` (Delta s =
    0.05 * 3^(1/3) ~ 0.07211); ``n_intervals`` overrides it and must
    then put 0 on a node.  theta and k are read off the ODE samples by
    local cubic interpolation of gamma and u.
    """
    x = raw.prof.x
    x_lo, x_hi = x[0], x[-1]
    if n_intervals is None:
        n_intervals = int(round((x_hi - x_lo) / x_spacing))
    dx_node = (x_hi - x_lo) / n_intervals
    j0 = -x_lo / dx_node
    if abs(j0 - round(j0)) > 1e-6:
        raise BadCount("0 is not a node of the working grid")
    xn = x_lo + np.arange(n_intervals + 1) * dx_node
    gamma = _cubic_at(raw.prof.x, raw.prof.gamma, xn)
    u = _cubic_at(raw.prof.x, raw.prof.u, xn)
    s = CUBE_ROOT_3 * xn
    theta = 2.0 * (gamma - raw.prof.gamma[-1])
    theta[-1] = 0.0
    return WorkingGrid(
        s=s,
        theta=theta,
        k=(2.0 / CUBE_ROOT_3) * u,
        delta_s=CUBE_ROOT_3 * dx_node,
        origin_index=int(round(j0)),
    )


def _cubic_at(xs, ys, xq):
    """Four-point Lagrange interpolation on a uniform ascending grid."""
    h = xs[1] - xs[0]
    pos = (xq - xs[0]) / h
    i = np.rint(pos)
    on_node = np.abs(pos - i) < 1e-7
    out = np.empty_like(xq)
    out[on_node] = ys[i[on_node].astype(int)]
    off = ~on_node
    if np.any(off):
        base = np.clip(np.floor(pos[off]).astype(int) - 1, 0, len(xs) - 4)
        t = pos[off] - base
        y0, y1, y2, y3 = (ys[base + m] for m in range(4))
        out[off] = (
            -y0 * (t - 1) * (t - 2) * (t - 3) / 6
            + y1 * t * (t - 2) * (t - 3) / 2
            - y2 * t * (t - 1) * (t - 3) / 2
            + y3 * t * (t - 1) * (t - 2) / 6
        )
    return out


def find_joint(s, theta, k, theta_minus: float, s_min: float) -> JointInfo:
    """First node past the first minimum with theta > theta^- and k > 0."""
    for j in range(len(s)):
        if s[j] > s_min and theta[j] > theta_minus and k[j] > 0:
            return JointInfo(float(s[j]), float(theta[j]), float(k[j]), j)
    raise NoJoint("no node after the first minimum satisfies theta > theta^- and k > 0")


def exponential_tail(s, joint: JointInfo, theta_minus: float) -> np.ndarray:
    """theta^- + (theta_J - theta^-) exp(k_J (s - s_J) / (theta_J - theta^-))."""
    amp = joint.theta_at_joint - theta_minus
    return theta_minus + amp * np.exp(joint.k_at_joint * (np.asarray(s) - joint.s_joint) / amp)


def append_exponential_tail(s, theta, joint: JointInfo, theta_minus: float) -> np.ndarray:
    """Replace theta left of the joint by a decaying exponential with first-order contact."""
    s = np.asarray(s)
    out = np.array(theta, dtype=float)
    left = s <= s[joint.index]
    out[left] = exponential_tail(s[left], joint, theta_minus)
    return out


def assemble_grid(
    s_work,
    theta_work,
    target_N: int,
    pad_left: int,
    pad_right: int,
    theta_minus: float,
    theta_plus: float = 0.0,
    **kwargs,
) -> AngleProfile:
    """Pad the working grid with constant nodes up to N + 1 points.

    The spacing of ``s_work`` is kept, so every working node (0
    included) stays a node.
    """
    if not _is_power_of_two(target_N):
        raise BadCount(f"N = {target_N} is not a power of two")
    n_work = len(s_work)
    if pad_left < 0 or pad_right < 0 or n_work + pad_left + pad_right != target_N + 1:
        raise BadCount(
            f"{n_work} working nodes + pads {pad_left}/{pad_right} != N + 1 = {target_N + 1}"
        )
    ds = (s_work[-1] - s_work[0]) / (n_work - 1)
    theta = np.concatenate(
        [np.full(pad_left, theta_minus), np.asarray(theta_work, dtype=float), np.full(pad_right, theta_plus)]
    )
    theta[0] = theta_minus
    theta[-1] = theta_plus
    s_a = s_work[0] - pad_left * ds
    s_b = s_a + target_N * ds
    return AngleProfile(s_a=s_a, s_b=s_b, theta=theta, theta_minus=theta_minus, theta_plus=theta_plus, **kwargs)


def wavenumbers(N: int) -> np.ndarray:
    """Integer frequencies xi in FFT order (-N/2 included, +N/2 not)."""
    return np.fft.fftfreq(N, 1.0 / N)


def filter_multiplier(N: int) -> np.ndarray:
    return np.exp(-10.0 * (2.5 * np.abs(wavenumbers(N)) / N) ** 25)


def spectral_filter(profile: AngleProfile) -> AngleProfile:
    """Damp high modes of the periodized angle by exp(-10 (2.5|xi|/N)^25)."""
    tilde = profile.periodized()
    hat = np.fft.fft(tilde[:-1]) * filter_multiplier(profile.N)
    out = np.fft.ifft(hat).real
    out[0] = 0.0
    return AngleProfile.from_periodized(np.append(out, 0.0), profile)


def theta_s_from_theta(profile: AngleProfile) -> np.ndarray:
    """Curvature k = theta_s at all N + 1 nodes via the periodized field."""
    N, L = profile.N, profile.L
    hat = np.fft.fft(profile.periodized()[:-1])
    d = np.fft.ifft(2j * np.pi * wavenumbers(N) / L * hat).real
    k = d + profile.jump / L
    return np.append(k, k[0])


@dataclass
class BuildResult:
    profile: AngleProfile
    raw: RawTheta
    work: WorkingGrid
    joint: JointInfo
    first_max: tuple[float, float]
    first_min: tuple[float, float]
    unfiltered: AngleProfile


def build_profile(
    prof: ProfileSolution,
    target_N: int,
    pad_left: int,
    pad_right: int,
    *,
    apply_filter: bool = True,
    x_spacing: float = 0.05,
) -> BuildResult:
    """Full construction of theta(s, 1) from a decayed ODE profile.

    ``x_spacing`` is the working-grid node spacing in x (refinement studies).
    """
    raw = theta_from_profile(prof)
    work = working_grid(raw, x_spacing=x_spacing)
    left = work.s < 0
    theta_minus, first_max, first_min = estimate_theta_minus(work.s[left], work.theta[left])
    joint = find_joint(work.s, work.theta, work.k, theta_minus, first_min[0])
    corrected = append_exponential_tail(work.s, work.theta, joint, theta_minus)
    meta = {"pad_left": pad_left, "pad_right": pad_right, "origin_index": pad_left + work.origin_index}
    unfiltered = assemble_grid(
        work.s, corrected, target_N, pad_left, pad_right, theta_minus, 0.0, pair=prof.pair, meta=meta
    )
    final = spectral_filter(unfiltered) if apply_filter else unfiltered
    return BuildResult(final, raw, work, joint, first_max, first_min, unfiltered)
