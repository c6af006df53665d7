"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the pytest terminal
summary. Criteria 4-6 need the Epinions files: point ``BCREC_EPINIONS_DIR`` at
a directory holding ``ratings_data.txt`` and ``trust_data.txt`` (optionally
``.bz2``), or place them under ``data/epinions/``.
"""

import contextlib
import io
import os
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, epinions_paths, fixture_data, random_micro

from bcrec import kernels
from bcrec.cli import main as cli_main
from bcrec.data import load_ratings, load_trust, split_folds, table_from_triples, trust_from_edges
from bcrec.evaluation import ExperimentConfig, run_experiment
from bcrec.predict import Model, PredictorConfig
from bcrec.similarity import (
    available,
    bc_items,
    build_histograms,
    build_user_profiles,
    dif_fast,
    dif_naive,
    rsp,
    sim_fast,
    sim_naive,
)
from bcrec.social import tdif, tsim

JOBS = os.cpu_count() or 1


@contextlib.contextmanager
def criterion(number, title):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        ACCEPTANCE_LINES.append(f"[FAIL] {number}. {title} ({time.perf_counter() - t0:.1f}s): {msg}")
        raise
    ACCEPTANCE_LINES.append(f"[PASS] {number}. {title} ({time.perf_counter() - t0:.1f}s)")


def _need_epinions():
    ratings, trust = epinions_paths()
    if ratings is None or trust is None:
        pytest.fail("Epinions ratings_data.txt / trust_data.txt not found "
                    "(set BCREC_EPINIONS_DIR or use data/epinions/)")
    return ratings, trust


def test_1_oracle_equivalence():
    with criterion(1, "sim_fast/dif_fast == sim_naive/dif_naive on 1000 random micro-datasets"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(20240601)
        n_pairs = 0
        for _ in range(1000):
            triples, edges = random_micro(rng)
            assert len(triples) <= 40 and len(edges) <= 10
            t = table_from_triples(triples)
            assert t.n_users <= 10 and t.n_items <= 10
            h = build_histograms(t)
            p = build_user_profiles(t, h)
            for a in range(t.n_user_slots):
                for b in range(t.n_user_slots):
                    for naive, fast in ((sim_naive(a, b, t, h), sim_fast(p[a], p[b])),
                                        (dif_naive(a, b, t, h), dif_fast(p[a], p[b]))):
                        assert available(naive) == available(fast), (triples, a, b)
                        if available(naive):
                            assert abs(naive - fast) <= 1e-9, (triples, a, b)
                        else:
                            assert naive == fast
                    n_pairs += 1
        assert n_pairs > 1000
        assert time.perf_counter() - t0 < 30


def test_2_algebraic_invariants():
    with criterion(2, "BC/RSP/SIM/DIF invariants and prediction ranges"):
        t0 = time.perf_counter()
        assert rsp(3, 2) == 0.75
        for a in range(1, 6):
            for b in range(1, 6):
                assert 0.0 <= rsp(a, b) <= 1.0 and rsp(a, b) == rsp(b, a)
        rng = np.random.default_rng(77)
        variants = [PredictorConfig(method=m, social=s) for m in "AB" for s in (False, True)]
        for _ in range(300):
            triples, edges = random_micro(rng)
            t = table_from_triples(triples)
            m = Model.fit(t, trust_from_edges(edges))
            S = m.hist.signatures[m.hist.totals > 0]
            for i in range(len(S)):
                assert abs(bc_items(S[i], S[i]) - 1.0) <= 1e-12
                for j in range(len(S)):
                    bij = bc_items(S[i], S[j])
                    assert bij == bc_items(S[j], S[i])
                    assert 0.0 <= bij <= 1 + 1e-12
            p = m.profiles
            for a in range(t.n_user_slots):
                for b in range(t.n_user_slots):
                    s_ab, s_ba = sim_fast(p[a], p[b]), sim_fast(p[b], p[a])
                    d_ab, d_ba = dif_fast(p[a], p[b]), dif_fast(p[b], p[a])
                    if available(s_ab):
                        assert abs(s_ab - s_ba) <= 1e-12 and -1e-12 <= s_ab <= 1 + 1e-12
                        assert abs(d_ab + d_ba) <= 1e-12 and -4 - 1e-12 <= d_ab <= 4 + 1e-12
            for q in range(t.n_user_slots):
                for i in range(t.n_item_slots):
                    for cfg in variants:
                        o = m.predict(q, i, cfg)
                        if not o.covered:
                            continue
                        if cfg.method == "A":
                            assert 1.0 - 1e-12 <= o.raw <= 5.0 + 1e-12
                        assert o.rounded in (1, 2, 3, 4, 5)
        assert time.perf_counter() - t0 < 30


def test_3_golden_fixtures(golden):
    with criterion(3, "hand fixtures match the brute-force oracle within 1e-9"):
        tol = 1e-9
        checked = 0
        for name, key in (("THREE_USER", "three_user"), ("FOUR_USER", "four_user")):
            t, _ = fixture_data(name)
            h = build_histograms(t)
            p = build_user_profiles(t, h)
            for kind, naive, fast in (("sim", sim_naive, sim_fast), ("dif", dif_naive, dif_fast)):
                for pair, want in golden[key][kind].items():
                    a, b = (t.user_index[u] for u in pair.split("|"))
                    for got in (naive(a, b, t, h), fast(p[a], p[b])):
                        assert (want is None) == (not available(got)), (kind, pair)
                        if want is not None:
                            assert abs(got - want) <= tol, (kind, pair)
                        checked += 1
        for name, key in (("FOUR_USER", "four_user"), ("FIVE_USER", "five_user")):
            t, g = fixture_data(name)
            m = Model.fit(t, g)
            for kind, fn in (("tsim", tsim), ("tdif", tdif)):
                for pair, want in golden[key][kind].items():
                    q, y = (t.user_index[u] for u in pair.split("|"))
                    got = fn(q, m.trust.trustees(q).tolist(), y, m.profiles).value
                    assert want is not None and abs(got - want) <= tol, (kind, pair)
                    checked += 1
        t, g = fixture_data("FIVE_USER")
        m = Model.fit(t, g)
        arrays = kernels.kernel_arrays(m.train, m.profiles, m.trust)
        for k, want in golden["five_user"]["predict"].items():
            user, item, method, social, inc = k.split("|")
            cfg = PredictorConfig(method=method, social=social == "social", include_scorer_as_trustee=inc == "inc")
            o = m.predict_ids(user, item, cfg)
            assert o.covered == want["covered"], k
            if o.covered:
                assert abs(o.raw - want["raw"]) <= tol and o.rounded == want["rounded"], k
                raw, code = kernels.predict_batch([t.user_index[user]], [t.item_index[item]], arrays,
                                                  method, cfg.social, cfg.include_scorer_as_trustee)
                assert code[0] == kernels.COVERED and abs(raw[0] - want["raw"]) <= tol, k
            checked += 1
        assert checked > 100


def test_4_protocol_properties_epinions_subsample():
    with criterion(4, "Epinions 5% subsample: coverage(B) >= coverage(A); jobs=8 == jobs=1"):
        t0 = time.perf_counter()
        rpath, tpath = _need_epinions()
        full = load_ratings(rpath)
        trust = load_trust(tpath)
        rng = np.random.default_rng(5)
        keep = np.sort(rng.permutation(full.n_ratings)[: int(round(0.05 * full.n_ratings))])
        table = full.subset(keep)
        split = split_folds(table, 5, 42)
        for social in (False, True):
            ra = run_experiment(ExperimentConfig(predictor=PredictorConfig(method="A", social=social), k=5, seed=42),
                                table, trust, split)
            rb = run_experiment(ExperimentConfig(predictor=PredictorConfig(method="B", social=social), k=5, seed=42),
                                table, trust, split)
            for fa, fb in zip(ra.folds, rb.folds):
                assert fb["n_predicted"] >= fa["n_predicted"]
        for method in "AB":
            cfg = ExperimentConfig(predictor=PredictorConfig(method=method, social=True), k=5, seed=42, jobs=1)
            serial = run_experiment(cfg, table, trust, split)
            par = run_experiment(ExperimentConfig(**{**cfg.__dict__, "jobs": 8}), table, trust, split)
            for f1, f8 in zip(serial.folds, par.folds):
                assert f1["n_predicted"] == f8["n_predicted"] and f1["not_covered"] == f8["not_covered"]
                assert abs(f1["mae_raw"] - f8["mae_raw"]) <= 1e-9
                assert abs(f1["rmse_raw"] - f8["rmse_raw"]) <= 1e-9
        assert time.perf_counter() - t0 < 300


def test_5_dataset_reproduction():
    with criterion(5, "Epinions stats: 49290 users, 139738 items, 664824 ratings, 487181 trust lines"):
        rpath, tpath = _need_epinions()
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            assert cli_main(["stats", "--ratings", str(rpath), "--trust", str(tpath)]) == 0
        stats = {}
        for line in buf.getvalue().splitlines():
            key, _, rest = line.rpartition("  ")
            stats[" ".join(line.split()[:2]) if line.startswith("trust") else line.split()[0]] = rest.split()[0]
        assert int(stats["users"]) == 49290
        assert int(stats["items"]) == 139738
        assert int(stats["ratings"]) == 664824
        assert int(stats["trust lines"]) == 487181
        assert float(stats["sparsity"]) > 0.99


def test_6_full_scale_reproduction():
    with criterion(6, "full Epinions, Method B social, k=5: coverage 86.7% +-2pp, MAE 0.7837 +-0.05, "
                      "MAE(B social) < MAE(A non-social)"):
        rpath, tpath = _need_epinions()
        table = load_ratings(rpath)
        trust = load_trust(tpath)
        split = split_folds(table, 5, 42)
        b = run_experiment(ExperimentConfig(predictor=PredictorConfig(method="B", social=True), jobs=JOBS),
                           table, trust, split)
        a = run_experiment(ExperimentConfig(predictor=PredictorConfig(method="A", social=False), jobs=JOBS),
                           table, trust, split)
        print(b.protocol)
        print(b.summary())
        print(a.summary())
        assert abs(b.aggregate["coverage"] - 0.867) <= 0.02
        assert abs(b.aggregate["mae"] - 0.7837) <= 0.05
        assert b.aggregate["mae"] < a.aggregate["mae"]
