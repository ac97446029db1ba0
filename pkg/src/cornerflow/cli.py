"""Batch command-line front end.

Every command writes into its own output directory a ``manifest.json``
(full configuration, version, status) plus its data files.  Options can
come from ``--config file.json``; flags given on the command line win.

Exit codes: 0 ok, 2 bracket or configuration error, 3 numerical failure,
4 construction failure, 5 instability.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .curves import close_curve, reconstruct_curve, solve_beta, track_point
from .diagnostics import DiagnosticsObserver, scan_curvature_integral, summarize
from .errors import ConfigError, CornerFlowError
from .experiments import EXPERIMENTS, build_experiment
from .io import load_pairs, load_profile, save_curve, save_diagnostics, save_pairs, save_profile, write_table
from .profile import _is_power_of_two, build_profile
from .shooting import (
    classify_region,
    find_admissible_v0,
    integrate_profile,
    trace_admissible_arclength,
    zero_tail,
)
from .spectral import EvolutionConfig, evolve

log = logging.getLogger("cornerflow")


# ---------------------------------------------------------------- parsing

_NEGATIVE_NUMBER = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with option values (flags override it)")
    p.add_argument("--out", type=Path, help="output directory (default: runs/<command>)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_profile_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", type=Path, help="angle profile CSV written by build-profile")
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS), default="exp1")


def _add_evolution(p: argparse.ArgumentParser, t_end: float) -> None:
    p.add_argument("--dt", type=float, default=-5e-5)
    p.add_argument("--t-end", dest="t_end", type=float, default=t_end)
    p.add_argument("--cadence", type=int, default=100, help="observer cadence in steps")
    p.add_argument("--pin", choices=("shift", "node"), default="shift")
    p.add_argument("--dealias", action="store_true", help="3/2-rule zero padding in the cubic term")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cornerflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cornerflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shoot", help="bisect u'(0) for an admissible pair, or integrate one pair")
    _add_common(p)
    p.add_argument("--u0", type=float, required=False, default=None)
    p.add_argument("--v0", type=float, default=None, help="integrate this pair instead of bisecting")
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--x-min", dest="x_min", type=float, default=-80.0)
    p.add_argument("--x-max", dest="x_max", type=float, default=20.0)
    p.add_argument("--dx", type=float, default=1e-5)
    p.add_argument("--stride", type=int, default=100, help="store every stride-th ODE step")

    p = sub.add_parser("trace", help="follow the admissible curve by arc length")
    _add_common(p)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=0.0, help="0 bisects to machine precision")
    p.add_argument("--dx", type=float, default=1e-5)

    p = sub.add_parser("raster", help="blow-up verdicts on a (u0, v0) grid")
    _add_common(p)
    p.add_argument("--u0-range", dest="u0_range", type=float, nargs=2, default=[-1.0, 1.0])
    p.add_argument("--v0-range", dest="v0_range", type=float, nargs=2, default=[-1.0, 1.0])
    p.add_argument("--grid", type=int, nargs=2, default=[101, 101], metavar=("NU", "NV"))
    p.add_argument("--dx", type=float, default=1e-4)

    p = sub.add_parser("build-profile", help="construct the filtered initial angle theta(s, 1)")
    _add_common(p)
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS), default="exp1")
    p.add_argument("--pair", type=float, nargs=2, default=None)
    p.add_argument("--x-min", dest="x_min", type=float, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--pad-left", dest="pad_left", type=int, default=None)
    p.add_argument("--pad-right", dest="pad_right", type=int, default=None)
    p.add_argument("--no-filter", dest="no_filter", action="store_true")

    p = sub.add_parser("evolve", help="integrate the angle equation backwards from t = 1")
    _add_common(p)
    _add_profile_source(p)
    _add_evolution(p, 0.01)
    p.add_argument("--snapshots", type=float, nargs="*", default=[])
    p.add_argument("--closed", action="store_true", help="record closure gap and area")

    p = sub.add_parser("close", help="append the turning loop and solve for (alpha, beta)")
    _add_common(p)
    _add_profile_source(p)
    p.add_argument("--alpha-bracket", dest="alpha_bracket", type=float, nargs=2, default=[0.1, 0.2])
    p.add_argument("--beta-bracket", dest="beta_bracket", type=float, nargs=2, default=[0.5, 20.0])
    p.add_argument("--alpha", type=float, default=None, help="solve only the inner beta problem at this alpha")
    p.add_argument("--inner-tol", dest="inner_tol", type=float, default=1e-11)
    p.add_argument("--outer-tol", dest="outer_tol", type=float, default=1e-10)

    p = sub.add_parser("scan", help="curvature integral along admissible pairs")
    _add_common(p)
    p.add_argument("--samples", type=Path, help="CSV with u0,v0 columns (as written by trace)")
    p.add_argument("--n", type=int, default=50, help="trace this many pairs when --samples is absent")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--symmetric", action="store_true", help="also scan the negated pairs")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("track", help="follow theta and z at one node along the evolution")
    _add_common(p)
    _add_profile_source(p)
    _add_evolution(p, 0.5)
    p.add_argument("--s0", type=float, default=None, help="grid node to follow (default s_a)")

    # accept "--dt -5e-5": argparse only recognises plain decimals as negative numbers
    for prs in (parser, *sub.choices.values()):
        prs._negative_number_matcher = _NEGATIVE_NUMBER
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# ------------------------------------------------------------- validation


def validate(args: argparse.Namespace) -> None:
    """Reject bad configurations before any output is produced."""
    if getattr(args, "N", None) is not None and not _is_power_of_two(args.N):
        raise ConfigError(f"N = {args.N} is not a power of two")
    if hasattr(args, "t_end"):
        if args.t_end <= 0:
            raise ConfigError("t_end must be positive")
        if args.dt == 0 or (args.t_end != 1.0 and np.sign(args.dt) != np.sign(args.t_end - 1.0)):
            raise ConfigError(f"dt = {args.dt} has the wrong sign for t_end = {args.t_end}")
    if args.command == "shoot":
        if args.u0 is None:
            raise ConfigError("shoot needs --u0")
        if args.v0 is None and args.bracket is None:
            raise ConfigError("shoot needs --bracket (or --v0 to integrate a single pair)")
    if args.command == "close":
        lo, hi = args.alpha_bracket
        if not 0 < lo < hi < 1:
            raise ConfigError("alpha bracket must satisfy 0 < lo < hi < 1")
    if args.command == "scan" and args.samples is not None and not Path(args.samples).exists():
        raise ConfigError(f"samples file {args.samples} not found")
    if getattr(args, "profile", None) is not None and not Path(args.profile).exists():
        raise ConfigError(f"profile file {args.profile} not found")


# --------------------------------------------------------------- commands


def _load_source(args):
    if args.profile is not None:
        return load_profile(args.profile)
    return build_experiment(args.experiment).profile


def cmd_shoot(args, out: Path) -> dict:
    if args.v0 is None:
        v0 = find_admissible_v0(args.u0, *args.bracket, tol=args.tol, x_max=args.x_max, dx=args.dx)
    else:
        v0 = args.v0
    print("%.17g" % v0)
    prof = integrate_profile((args.u0, v0), args.x_min, args.x_max, args.dx, stride=args.stride)
    write_table(
        out / "profile.csv",
        {"kind": "ode_profile", "u0": args.u0, "v0": v0},
        ("x", "u", "v", "gamma"),
        zip(prof.x, prof.u, prof.v, prof.gamma),
    )
    return {"u0": args.u0, "v0": v0}


def cmd_trace(args, out: Path) -> dict:
    pairs = trace_admissible_arclength(args.n, args.step, tol=args.tol, dx=args.dx)
    save_pairs(out / "admissible.csv", pairs, step=args.step)
    return {"n": len(pairs), "last": pairs[-1].as_tuple()}


def cmd_raster(args, out: Path) -> dict:
    r = classify_region(tuple(args.u0_range), tuple(args.v0_range), tuple(args.grid), dx=args.dx)
    uu, vv = np.meshgrid(r.u0, r.v0)
    write_table(out / "raster.csv", {"kind": "raster"}, ("u0", "v0", "verdict"), zip(uu.ravel(), vv.ravel(), r.verdict.ravel()))
    return {"cells": int(r.verdict.size), "undecided": int(np.count_nonzero(r.verdict == 0))}


def cmd_build_profile(args, out: Path) -> dict:
    exp = EXPERIMENTS[args.experiment]
    pair = tuple(args.pair) if args.pair else exp.pair
    x_min = exp.x_min if args.x_min is None else args.x_min
    N = exp.N if args.N is None else args.N
    pad_l = exp.pad_left if args.pad_left is None else args.pad_left
    pad_r = exp.pad_right if args.pad_right is None else args.pad_right
    prof = zero_tail(integrate_profile(pair, x_min, exp.x_max, exp.dx, stride=10), exp.x_max)
    res = build_profile(prof, N, pad_l, pad_r, apply_filter=not args.no_filter)
    save_profile(out / "profile.csv", res.profile)
    info = {
        "s_a": res.profile.s_a,
        "s_b": res.profile.s_b,
        "N": res.profile.N,
        "theta_minus": res.profile.theta_minus,
        "first_max": res.first_max,
        "first_min": res.first_min,
        "joint": [res.joint.s_joint, res.joint.theta_at_joint, res.joint.k_at_joint, res.joint.index],
    }
    print(json.dumps(info))
    return info


def _config(args) -> EvolutionConfig:
    return EvolutionConfig(
        dt=args.dt,
        t_end=args.t_end,
        snapshot_times=tuple(getattr(args, "snapshots", ()) or ()),
        cadence=args.cadence,
        pin=args.pin,
        dealias=args.dealias,
    )


def cmd_evolve(args, out: Path) -> dict:
    profile = _load_source(args)
    u0 = profile.pair.u0 if profile.pair is not None else None
    obs = DiagnosticsObserver(u0, closed=args.closed)
    result = evolve(profile, _config(args), obs)
    save_diagnostics(out / "diagnostics.csv", result.records, dt=args.dt)
    for t, snap in result.snapshots:
        save_profile(out / f"snapshot_t{t:.6g}.csv", snap)
    save_profile(out / "final.csv", result.final)
    summary = summarize(result.records)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return {"steps": result.steps, "summary": summary}


def cmd_close(args, out: Path) -> dict:
    profile = _load_source(args)
    if args.alpha is not None:
        rows: list = []
        beta, gap = solve_beta(profile, args.alpha, tuple(args.beta_bracket), args.inner_tol, rows)
        write_table(out / "closure_log.csv", {"kind": "closure_log"}, ("alpha", "beta", "re_end", "im_end"), rows)
        print("%.17g %.17g %.17g %.17g" % (args.alpha, beta, gap.real, gap.imag))
        return {"alpha": args.alpha, "beta": beta, "gap": [gap.real, gap.imag]}
    res = close_curve(profile, tuple(args.alpha_bracket), tuple(args.beta_bracket), args.inner_tol, args.outer_tol)
    write_table(out / "closure_log.csv", {"kind": "closure_log"}, ("alpha", "beta", "re_end", "im_end"), res.log)
    save_profile(out / "closed_profile.csv", res.profile)
    curve = reconstruct_curve(res.profile)
    save_curve(out / "curve.csv", curve, gap=res.residual, alpha=res.params.alpha, beta=res.params.beta)
    print("%.17g %.17g" % (res.params.alpha, res.params.beta))
    return {"alpha": res.params.alpha, "beta": res.params.beta, "gap": [res.residual.real, res.residual.imag]}


def cmd_scan(args, out: Path) -> dict:
    if args.samples is not None:
        pairs = load_pairs(args.samples)
    else:
        pairs = trace_admissible_arclength(args.n, args.step, tol=0.0)
    if args.symmetric:
        pairs = pairs + [-p for p in pairs if p.u0 != 0 or p.v0 != 0]
    rows = scan_curvature_integral(pairs, workers=args.workers)
    write_table(
        out / "scan.csv",
        {"kind": "curvature_integral"},
        ("u0", "v0", "integral"),
        ((r.pair.u0, r.pair.v0, r.integral) for r in rows),
    )
    vals = [r.integral for r in rows if r.integral is not None]
    return {"rows": len(rows), "failed": sum(r.integral is None for r in rows), "min": min(vals), "max": max(vals)}


def cmd_track(args, out: Path) -> dict:
    profile = _load_source(args)
    res = track_point(profile, _config(args), s0=args.s0)
    write_table(
        out / "track.csv",
        {"kind": "track", "s0": res.s0},
        ("t", "theta", "re_z", "im_z"),
        ((t, th, z.real, z.imag) for t, th, z in res.samples),
    )
    return {"s0": res.s0, "samples": len(res.samples)}


COMMANDS = {
    "shoot": cmd_shoot,
    "trace": cmd_trace,
    "raster": cmd_raster,
    "build-profile": cmd_build_profile,
    "evolve": cmd_evolve,
    "close": cmd_close,
    "scan": cmd_scan,
    "track": cmd_track,
}


def _manifest(args, status: str, result=None, error=None) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    return {"command": args.command, "version": __version__, "status": status, "config": cfg, "result": result, "error": error}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        validate(args)
    except CornerFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    out = args.out or Path("runs") / args.command
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = COMMANDS[args.command](args, out)
    except CornerFlowError as exc:
        (out / "manifest.json").write_text(json.dumps(_manifest(args, "failed", error=f"{type(exc).__name__}: {exc}"), indent=2, default=str))
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    (out / "manifest.json").write_text(json.dumps(_manifest(args, "ok", result), indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
