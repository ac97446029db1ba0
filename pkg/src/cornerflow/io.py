"""Plain-text artefacts: one JSON header line (prefixed by ``#``) followed by CSV.

Numbers are written with ``%.17g`` so files round-trip bit for bit and
identical runs give identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .curves import CurveSamples
from .diagnostics import DiagnosticsRecord
from .profile import AngleProfile
from .shooting import InitialPair

DIAGNOSTIC_COLUMNS = ("t", "energy", "k0", "k0_exact", "closure_error", "area", "support_width")


def _fmt(v) -> str:
    if v is None:
        return ""
    return "%.17g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, InitialPair):
        return [obj.u0, obj.v0]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_table(path, header: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(header), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_table(path) -> tuple[dict, list[str], list[list[float | None]]]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        header = json.loads(first[1:]) if first.startswith("#") else {}
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(x) if x != "" else None for x in row] for row in reader if row]
    return header, columns, rows


def read_columns(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Table as a dict of float arrays (missing values become NaN)."""
    header, columns, rows = read_table(path)
    data = np.array([[np.nan if v is None else v for v in r] for r in rows], dtype=float).reshape(len(rows), len(columns))
    return header, {c: data[:, i] for i, c in enumerate(columns)}


def save_profile(path, profile: AngleProfile, **extra) -> Path:
    header = {
        "kind": "angle_profile",
        "s_a": profile.s_a,
        "s_b": profile.s_b,
        "N": profile.N,
        "theta_minus": profile.theta_minus,
        "theta_plus": profile.theta_plus,
        "t": profile.t,
        "pair": profile.pair,
        "meta": profile.meta,
        **extra,
    }
    return write_table(path, header, ("s", "theta"), zip(profile.s, profile.theta))


def load_profile(path) -> AngleProfile:
    header, cols = read_columns(path)
    pair = header.get("pair")
    return AngleProfile(
        s_a=header["s_a"],
        s_b=header["s_b"],
        theta=cols["theta"],
        theta_minus=header["theta_minus"],
        theta_plus=header["theta_plus"],
        t=header.get("t", 1.0),
        pair=InitialPair(*pair) if pair else None,
        meta=header.get("meta", {}),
    )


def save_curve(path, curve: CurveSamples, **extra) -> Path:
    header = {"kind": "curve", "t": curve.t, **extra}
    return write_table(path, header, ("s", "re_z", "im_z"), zip(curve.s, curve.z.real, curve.z.imag))


def save_diagnostics(path, records: Sequence[DiagnosticsRecord], **extra) -> Path:
    rows = ([getattr(r, c) for c in DIAGNOSTIC_COLUMNS] for r in records)
    return write_table(path, {"kind": "diagnostics", **extra}, DIAGNOSTIC_COLUMNS, rows)


def save_pairs(path, pairs: Sequence[InitialPair], **extra) -> Path:
    return write_table(path, {"kind": "admissible", **extra}, ("u0", "v0"), (p.as_tuple() for p in pairs))


def load_pairs(path) -> list[InitialPair]:
    _, cols = read_columns(path)
    return [InitialPair(float(u), float(v)) for u, v in zip(cols["u0"], cols["v0"])]
