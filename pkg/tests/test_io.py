from __future__ import annotations

import numpy as np

from cornerflow.diagnostics import DiagnosticsRecord
from cornerflow.io import load_pairs, load_profile, read_columns, save_diagnostics, save_pairs, save_profile
from cornerflow.shooting import InitialPair

from .conftest import smooth_profile


def test_profile_round_trip_is_bit_exact(tmp_path):
    p = smooth_profile(N=64)
    p.pair = InitialPair(0.72, 1.1601860809647328)
    p.meta = {"origin_index": 3}
    save_profile(tmp_path / "p.csv", p)
    q = load_profile(tmp_path / "p.csv")
    assert np.array_equal(q.theta, p.theta)
    assert (q.s_a, q.s_b, q.theta_minus, q.theta_plus, q.pair, q.meta) == (
        p.s_a,
        p.s_b,
        p.theta_minus,
        p.theta_plus,
        p.pair,
        p.meta,
    )


def test_identical_content_gives_identical_files(tmp_path):
    p = smooth_profile(N=32)
    save_profile(tmp_path / "a.csv", p)
    save_profile(tmp_path / "b.csv", p)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_missing_diagnostics_become_nan(tmp_path):
    recs = [DiagnosticsRecord(1.0, 2.0, k0=0.5), DiagnosticsRecord(0.9, 2.1)]
    save_diagnostics(tmp_path / "d.csv", recs, dt=-1e-3)
    header, cols = read_columns(tmp_path / "d.csv")
    assert header == {"kind": "diagnostics", "dt": -1e-3}
    assert cols["k0"][0] == 0.5 and np.isnan(cols["k0"][1])


def test_pairs_round_trip(tmp_path):
    pairs = [InitialPair(0.1, -0.2), InitialPair(1 / 3, 2 / 7)]
    save_pairs(tmp_path / "pairs.csv", pairs)
    assert load_pairs(tmp_path / "pairs.csv") == pairs
