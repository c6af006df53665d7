"""Method A (similarity-weighted) and Method B (difference-adjusted) rating prediction.

These are the per-record reference implementations, written directly over
:class:`~bcrec.similarity.UserProfile` scores. Bulk evaluation goes through
:mod:`bcrec.kernels`, which is tested against these functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .data import R_MAX, R_MIN, RatingsTable, TrustGraph
from .similarity import (
    ItemHistograms,
    MaybeScore,
    Profiles,
    Unavailable,
    available,
    build_histograms,
    build_user_profiles,
    dif_fast,
    sim_fast,
)
from .social import tdif, tsim

ITEM_UNSEEN = "item-unseen"
NO_USABLE_SCORERS = "no-usable-scorers"


@dataclass(frozen=True)
class PredictorConfig:
    method: Literal["A", "B"] = "B"
    social: bool = True
    r_min: int = R_MIN
    r_max: int = R_MAX
    rounding: bool = True
    include_scorer_as_trustee: bool = False

    def __post_init__(self):
        if self.method not in ("A", "B"):
            raise ValueError(f"method must be 'A' or 'B', got {self.method!r}")
        if not self.r_min < self.r_max:
            raise ValueError("r_min must be below r_max")

    @property
    def label(self) -> str:
        return f"Method {self.method} {'social' if self.social else 'non-social'} version"


@dataclass(frozen=True)
class PredictionOutcome:
    raw: float | None = None
    rounded: int | float | None = None
    reason: str | None = None

    @property
    def covered(self) -> bool:
        return self.reason is None

    def __str__(self):
        if not self.covered:
            return f"not covered: {self.reason}"
        return f"raw={self.raw:.6f} rounded={self.rounded:g}"


def round_half_away(x):
    """Round to the nearest integer, halves away from zero (works on arrays)."""
    if np.ndim(x):
        return np.copysign(np.floor(np.abs(x) + 0.5), x)
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def finish(raw: float, cfg: PredictorConfig) -> PredictionOutcome:
    if cfg.rounding:
        return PredictionOutcome(raw=raw, rounded=int(min(cfg.r_max, max(cfg.r_min, round_half_away(raw)))))
    return PredictionOutcome(raw=raw, rounded=min(cfg.r_max, max(cfg.r_min, raw)))


def avg_or_fallback(a: MaybeScore, b: MaybeScore, missing_both: Literal["unavailable", "zero"]) -> MaybeScore:
    """Mean of the available scores; if neither is available, per ``missing_both``."""
    if available(a) and available(b):
        return (a + b) / 2
    if available(a):
        return a
    if available(b):
        return b
    if missing_both == "zero":
        return 0.0
    return a


class TrustIndex:
    """Trust adjacency over dense user indices (CSR)."""

    def __init__(self, indptr: np.ndarray, nbrs: np.ndarray):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.nbrs = np.asarray(nbrs, dtype=np.int64)

    @classmethod
    def from_graph(cls, graph: TrustGraph, table: RatingsTable) -> "TrustIndex":
        return cls(*graph.to_csr(table))

    @classmethod
    def empty(cls, n_users: int) -> "TrustIndex":
        return cls(np.zeros(n_users + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    def trustees(self, u: int) -> np.ndarray:
        return self.nbrs[self.indptr[u] : self.indptr[u + 1]]


def _scorers(q: int, t: int, train: RatingsTable):
    s, e = train.item_ptr[t], train.item_ptr[t + 1]
    users = train.item_users[s:e].tolist()
    rates = train.item_ratings[s:e].tolist()
    return [(y, r) for y, r in zip(users, rates) if y != q]


def predict_method_a(q: int, t: int, train: RatingsTable, profiles: Profiles, trust: TrustIndex,
                     cfg: PredictorConfig) -> PredictionOutcome:
    """Weighted mean of scorer ratings, weights SIM(q, y) or its average with TSIM."""
    scorers = _scorers(q, t, train)
    if not scorers:
        return PredictionOutcome(reason=ITEM_UNSEEN)
    pq = profiles[q]
    trustees = trust.trustees(q).tolist()
    num = den = 0.0
    used = 0
    for y, r in scorers:
        w = sim_fast(pq, profiles[y])
        if cfg.social:
            ts = tsim(q, trustees, y, profiles, cfg.include_scorer_as_trustee).value
            w = avg_or_fallback(w, ts, "unavailable")
        if not available(w):
            continue
        num += w * r
        den += w
        used += 1
    if used == 0 or den == 0.0:
        return PredictionOutcome(reason=NO_USABLE_SCORERS)
    return finish(num / den, cfg)


def predict_method_b(q: int, t: int, train: RatingsTable, profiles: Profiles, trust: TrustIndex,
                     cfg: PredictorConfig) -> PredictionOutcome:
    """Unweighted mean over scorers of ``r_y + diff``; missing diffs count as 0."""
    scorers = _scorers(q, t, train)
    if not scorers:
        return PredictionOutcome(reason=ITEM_UNSEEN)
    pq = profiles[q]
    trustees = trust.trustees(q).tolist()
    total = 0.0
    for y, r in scorers:
        diff = dif_fast(pq, profiles[y])
        if cfg.social:
            td = tdif(q, trustees, y, profiles, cfg.include_scorer_as_trustee).value
            diff = avg_or_fallback(diff, td, "zero")
        elif not available(diff):
            diff = 0.0
        total += r + diff
    return finish(total / len(scorers), cfg)


@dataclass
class Model:
    """Everything a prediction needs, built from one training table."""

    train: RatingsTable
    hist: ItemHistograms
    profiles: Profiles
    trust: TrustIndex

    @classmethod
    def fit(cls, train: RatingsTable, trust: TrustGraph | None = None) -> "Model":
        hist = build_histograms(train)
        profiles = build_user_profiles(train, hist)
        index = TrustIndex.from_graph(trust, train) if trust is not None else TrustIndex.empty(train.n_user_slots)
        return cls(train, hist, profiles, index)

    def predict(self, q: int, t: int, cfg: PredictorConfig) -> PredictionOutcome:
        fn = predict_method_a if cfg.method == "A" else predict_method_b
        return fn(q, t, self.train, self.profiles, self.trust, cfg)

    def predict_ids(self, user_id, item_id, cfg: PredictorConfig) -> PredictionOutcome:
        """Predict by original ids; an unknown item is reported as unseen."""
        t = self.train.item_index.get(item_id)
        if t is None:
            return PredictionOutcome(reason=ITEM_UNSEEN)
        q = self.train.user_index.get(user_id)
        if q is None:
            raise KeyError(f"unknown user id {user_id!r}")
        return self.predict(q, t, cfg)

