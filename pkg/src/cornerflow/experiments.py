"""Reference experiments: the admissible pair and grids of the three open runs."""

from __future__ import annotations

from dataclasses import dataclass

from .profile import BuildResult, build_profile
from .shooting import DEFAULT_DX, InitialPair, integrate_profile, zero_tail

REFERENCE_PAIR = InitialPair(0.72, 1.1601860809647328)


@dataclass(frozen=True)
class Experiment:
    """Integration window in x and the padded grid of one open-curve run.

    All runs share the working-grid spacing Delta s = 0.05 * 3^(1/3);
    the pads are whole node counts so s = 0 stays a node.
    """

    name: str
    x_min: float
    N: int
    pad_left: int
    pad_right: int
    x_max: float = 20.0
    dx: float = DEFAULT_DX
    pair: InitialPair = REFERENCE_PAIR


EXPERIMENTS = {
    "exp1": Experiment("exp1", -80.0, 4096, 1536, 560),
    "exp2": Experiment("exp2", -400.0, 16384, 4096, 3888),
    "exp3": Experiment("exp3", -800.0, 32768, 8193, 8175),
}


def build_experiment(exp: Experiment | str, *, apply_filter: bool = True) -> BuildResult:
    """Integrate the profile ODE and assemble the filtered initial angle for ``exp``."""
    if isinstance(exp, str):
        exp = EXPERIMENTS[exp]
    prof = integrate_profile(exp.pair, exp.x_min, exp.x_max, exp.dx, stride=10)
    prof = zero_tail(prof, exp.x_max)
    return build_profile(prof, exp.N, exp.pad_left, exp.pad_right, apply_filter=apply_filter)
