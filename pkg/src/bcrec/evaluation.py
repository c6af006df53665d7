"""k-fold evaluation: coverage, MAE and RMSE for the four predictor variants."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import IO, Sequence

import numpy as np

from . import kernels
from .data import FoldSplit, RatingsTable, TrustGraph, split_folds, train_test_views
from .predict import PredictorConfig, TrustIndex, round_half_away
from .similarity import build_histograms, build_user_profiles

log = logging.getLogger(__name__)

# Published figures for the four variants, for side-by-side reading only.
PUBLISHED_REFERENCE = {
    "Method A non-social version": {"coverage": 0.8534, "mae": 0.7959, "rmse": 1.1280},
    "Method A social version": {"coverage": 0.8534, "mae": 0.7938, "rmse": 1.1299},
    "Method B non-social version": {"coverage": 0.867, "mae": 0.7889, "rmse": 1.1328},
    "Method B social version": {"coverage": 0.867, "mae": 0.7837, "rmse": 1.1188},
}


def mae(truth, pred) -> float | None:
    """Mean absolute error; ``None`` when there is nothing to score."""
    truth = np.asarray(truth, dtype=np.float64)
    if truth.size == 0:
        return None
    return float(np.mean(np.abs(truth - np.asarray(pred, dtype=np.float64))))


def rmse(truth, pred) -> float | None:
    truth = np.asarray(truth, dtype=np.float64)
    if truth.size == 0:
        return None
    return float(math.sqrt(np.mean((truth - np.asarray(pred, dtype=np.float64)) ** 2)))


@dataclass(frozen=True)
class ExperimentConfig:
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    k: int = 5
    seed: int = 42
    # None: every other fold; "next:N": the N folds after the test fold
    # (cyclically); or an explicit tuple of fold ids.
    train_folds: str | tuple | None = None
    test_folds: tuple | None = None
    jobs: int = 1
    limit: int | None = None
    backend: str | None = None

    def train_folds_for(self, test_fold: int) -> list[int]:
        tf = self.train_folds
        if tf is None or tf == "all":
            return [f for f in range(self.k) if f != test_fold]
        if isinstance(tf, str) and tf.startswith("next:"):
            n = int(tf.split(":", 1)[1])
            if not 1 <= n < self.k:
                raise ValueError(f"next:N needs 1 <= N < k, got {tf}")
            return [(test_fold + j) % self.k for j in range(1, n + 1)]
        return sorted(int(f) for f in tf)

    def describe_protocol(self) -> str:
        tests = list(self.test_folds) if self.test_folds is not None else list(range(self.k))
        parts = [f"{self.k}-fold random split of rating records (seed {self.seed})"]
        for f in tests:
            parts.append(f"test fold {f} <- train folds {self.train_folds_for(f)}")
        if self.limit:
            parts.append(f"test records capped at {self.limit} in total (seeded subsample)")
        return "; ".join(parts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train_folds"] = list(self.train_folds) if isinstance(self.train_folds, tuple) else self.train_folds
        d["test_folds"] = list(self.test_folds) if self.test_folds is not None else None
        d["backend"] = self.backend or kernels.DEFAULT_BACKEND
        return d


@dataclass
class FoldResult:
    test_fold: int
    train_folds: list
    n_train: int
    users: np.ndarray
    items: np.ndarray
    truth: np.ndarray
    raw: np.ndarray
    rounded: np.ndarray
    code: np.ndarray
    seconds: float = 0.0

    @property
    def covered(self) -> np.ndarray:
        return self.code == kernels.COVERED


def _metrics(truth, raw, rounded, code) -> dict:
    cov = code == kernels.COVERED
    n_test = int(len(truth))
    reasons = Counter(kernels.REASONS[int(c)] for c in code[~cov])
    return {
        "n_test": n_test,
        "n_predicted": int(cov.sum()),
        "coverage": float(cov.sum() / n_test) if n_test else None,
        "mae": mae(truth[cov], rounded[cov]),
        "rmse": rmse(truth[cov], rounded[cov]),
        "mae_raw": mae(truth[cov], raw[cov]),
        "rmse_raw": rmse(truth[cov], raw[cov]),
        "not_covered": dict(sorted(reasons.items())),
    }


def _finish(raw: np.ndarray, cfg: PredictorConfig) -> np.ndarray:
    out = round_half_away(raw) if cfg.rounding else raw.copy()
    return np.clip(out, cfg.r_min, cfg.r_max)


def _per_fold_limits(limit: int | None, n_folds: int) -> list[int | None]:
    if not limit:
        return [None] * n_folds
    base, extra = divmod(limit, n_folds)
    return [base + (1 if j < extra else 0) for j in range(n_folds)]


def evaluate_fold(table: RatingsTable, trust: TrustGraph, split: FoldSplit, test_fold: int,
                  cfg: ExperimentConfig, limit: int | None = None) -> FoldResult:
    t0 = time.perf_counter()
    train_folds = cfg.train_folds_for(test_fold)
    train, test = train_test_views(table, split, test_fold, train_folds)
    if limit is not None:
        test = test.sample(limit, cfg.seed + test_fold)
    hist = build_histograms(train)
    profiles = build_user_profiles(train, hist)
    index = TrustIndex.from_graph(trust, train)
    arrays = kernels.kernel_arrays(train, profiles, index)
    p = cfg.predictor
    log.info("fold %d: %d train / %d test records, %s", test_fold, train.n_ratings, len(test), p.label)
    raw, code = kernels.predict_batch(
        test.users, test.items, arrays, p.method, p.social, p.include_scorer_as_trustee,
        backend=cfg.backend, jobs=cfg.jobs, progress_every=50_000,
    )
    rounded = np.where(code == kernels.COVERED, _finish(raw, p), np.nan)
    return FoldResult(test_fold, train_folds, train.n_ratings, test.users, test.items,
                      test.ratings.astype(np.float64), raw, rounded, code, time.perf_counter() - t0)


@dataclass
class EvaluationReport:
    label: str
    protocol: str
    config: dict
    folds: list
    aggregate: dict
    macro: dict
    seconds: float = 0.0
    results: list = field(default_factory=list, repr=False)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "label": self.label,
            "protocol": self.protocol,
            "config": self.config,
            "folds": self.folds,
            "aggregate": self.aggregate,
            "macro": self.macro,
            "published_reference": PUBLISHED_REFERENCE.get(self.label),
        }
        if include_timing:
            d["timing"] = {"total_seconds": self.seconds,
                           "fold_seconds": [r.seconds for r in self.results]}
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        a = self.aggregate

        def fmt(x):
            return "n/a" if x is None else f"{x:.4f}"

        return (f"{self.label}: coverage {fmt(a['coverage'])} ({a['n_predicted']}/{a['n_test']}), "
                f"MAE {fmt(a['mae'])}, RMSE {fmt(a['rmse'])} "
                f"[raw MAE {fmt(a['mae_raw'])}, raw RMSE {fmt(a['rmse_raw'])}]")

    def dump_predictions(self, out: IO[str], table: RatingsTable) -> None:
        """Write ``user,item,truth,raw,rounded,covered,reason`` rows in original ids."""
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["user", "item", "truth", "raw", "rounded", "covered", "reason"])
        uids, iids = table.user_ids, table.item_ids
        for r in self.results:
            for u, i, tr, raw, rd, c in zip(r.users, r.items, r.truth, r.raw, r.rounded, r.code):
                ok = c == kernels.COVERED
                w.writerow([uids[u], iids[i], int(tr), repr(float(raw)) if ok else "",
                            (f"{rd:g}" if ok else ""), int(ok), "" if ok else kernels.REASONS[int(c)]])


def run_experiment(cfg: ExperimentConfig, table: RatingsTable, trust: TrustGraph,
                   split: FoldSplit | None = None) -> EvaluationReport:
    """Evaluate one predictor variant over the configured test folds."""
    t0 = time.perf_counter()
    split = split if split is not None else split_folds(table, cfg.k, cfg.seed)
    if split.k != cfg.k:
        raise ValueError(f"fold split has k={split.k}, config has k={cfg.k}")
    test_folds = list(cfg.test_folds) if cfg.test_folds is not None else list(range(cfg.k))
    results = [
        evaluate_fold(table, trust, split, f, cfg, lim)
        for f, lim in zip(test_folds, _per_fold_limits(cfg.limit, len(test_folds)))
    ]

    folds = []
    for r in results:
        m = _metrics(r.truth, r.raw, r.rounded, r.code)
        folds.append({"test_fold": r.test_fold, "train_folds": r.train_folds, "n_train": r.n_train, **m})

    cat = {name: np.concatenate([getattr(r, name) for r in results]) for name in ("truth", "raw", "rounded", "code")}
    aggregate = _metrics(cat["truth"], cat["raw"], cat["rounded"], cat["code"])
    macro = {}
    for key in ("coverage", "mae", "rmse", "mae_raw", "rmse_raw"):
        vals = [f[key] for f in folds if f[key] is not None]
        macro[key] = float(np.mean(vals)) if vals else None

    return EvaluationReport(
        label=cfg.predictor.label,
        protocol=cfg.describe_protocol(),
        config=cfg.to_dict(),
        folds=folds,
        aggregate=aggregate,
        macro=macro,
        seconds=time.perf_counter() - t0,
        results=results,
    )


def run_variants(table: RatingsTable, trust: TrustGraph, base: ExperimentConfig,
                 variants: Sequence[tuple[str, bool]] = (("A", False), ("A", True), ("B", False), ("B", True))):
    """Run several predictor variants on one shared fold split."""
    split = split_folds(table, base.k, base.seed)
    return [
        run_experiment(replace(base, predictor=replace(base.predictor, method=m, social=s)), table, trust, split)
        for m, s in variants
    ]
