"""Bhattacharyya-weighted user similarity (SIM) and rating difference (DIF).

Two routes compute the same quantities:

* ``sim_naive`` / ``dif_naive`` walk every item pair ``(i, j)`` in
  ``I_q x I_x`` and weight each term by ``BC(i, j)``. Cost is
  ``O(|I_q| |I_x|)``; they stay here as the reference the fast route is tested
  against.
* ``sim_fast`` / ``dif_fast`` use per-user profiles. With ``s_i`` the
  square-root density of item ``i``, ``BC(i, j) = s_i . s_j``, so the double
  sum factors through per-rating-value signature sums ``v[a]``::

      num = sum_{a,b} w(a, b) * (v_q[a] . v_x[b])
      den = V_q . V_x,    V = sum_a v[a]

  ``w(a, b)`` is RSP for SIM and ``a - b`` for DIF.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .data import R_MAX, R_MIN, RatingsTable

BIN_COUNT = R_MAX - R_MIN + 1
RATING_VALUES = np.arange(R_MIN, R_MAX + 1, dtype=np.float64)


def rsp_unit_penalty(r_min: int = R_MIN, r_max: int = R_MAX) -> float:
    """RSP drop per unit of rating difference."""
    return 1.0 / (r_max - r_min)


class Unavailable(str, enum.Enum):
    """Reason a score cannot be computed. Never usable as a number."""

    NO_RATINGS = "no-ratings"
    ZERO_WEIGHT = "zero-weight"


MaybeScore = Union[float, Unavailable]


def available(score) -> bool:
    return not isinstance(score, Unavailable)


def rsp(a: int, b: int, r_min: int = R_MIN, r_max: int = R_MAX) -> float:
    """Rating-value similarity, 1 for equal ratings down to 0 at the scale extremes."""
    return 1.0 - abs(a - b) * rsp_unit_penalty(r_min, r_max)


def rsp_matrix() -> np.ndarray:
    diff = np.abs(RATING_VALUES[:, None] - RATING_VALUES[None, :])
    return 1.0 - diff * rsp_unit_penalty()


def diff_matrix() -> np.ndarray:
    return RATING_VALUES[:, None] - RATING_VALUES[None, :]


@dataclass(frozen=True)
class ItemHistograms:
    """Per-item rating counts (``counts[i, h - R_MIN]``) and square-root densities."""

    counts: np.ndarray
    signatures: np.ndarray

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def density(self, item: int) -> np.ndarray:
        return self.counts[item] / self.counts[item].sum()


def build_histograms(train: RatingsTable) -> ItemHistograms:
    """Rating histograms of every item slot; items without training ratings stay all-zero."""
    if train.n_ratings == 0:
        raise ValueError("cannot build histograms from an empty training set")
    counts = np.zeros((train.n_item_slots, BIN_COUNT), dtype=np.int64)
    np.add.at(counts, (train.items, train.ratings.astype(np.int64) - R_MIN), 1)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        sig = np.sqrt(np.where(totals > 0, counts / np.maximum(totals, 1), 0.0))
    counts.flags.writeable = False
    sig.flags.writeable = False
    return ItemHistograms(counts, sig)


def bc_items(si: np.ndarray, sj: np.ndarray) -> float:
    """Bhattacharyya coefficient of two items from their square-root densities."""
    return float(np.dot(si, sj))


def bc_from_counts(ci, cj) -> float:
    """Bhattacharyya coefficient straight from two count histograms."""
    ti, tj = sum(ci), sum(cj)
    return sum(math.sqrt((a / ti) * (b / tj)) for a, b in zip(ci, cj))


def _naive(q: int, x: int, train: RatingsTable, hist: ItemHistograms, term) -> MaybeScore:
    iq = train.user_items[train.user_ptr[q] : train.user_ptr[q + 1]]
    rq = train.user_ratings[train.user_ptr[q] : train.user_ptr[q + 1]]
    ix = train.user_items[train.user_ptr[x] : train.user_ptr[x + 1]]
    rx = train.user_ratings[train.user_ptr[x] : train.user_ptr[x + 1]]
    if len(iq) == 0 or len(ix) == 0:
        return Unavailable.NO_RATINGS
    counts = hist.counts.tolist()
    num = den = 0.0
    for i, ri in zip(iq.tolist(), rq.tolist()):
        for j, rj in zip(ix.tolist(), rx.tolist()):
            w = bc_from_counts(counts[i], counts[j])
            num += w * term(ri, rj)
            den += w
    if den == 0.0:
        return Unavailable.ZERO_WEIGHT
    return num / den


def sim_naive(q: int, x: int, train: RatingsTable, hist: ItemHistograms) -> MaybeScore:
    """SIM by direct double sum over all item pairs of ``q`` and ``x``."""
    return _naive(q, x, train, hist, rsp)


def dif_naive(q: int, x: int, train: RatingsTable, hist: ItemHistograms) -> MaybeScore:
    """DIF by direct double sum; positive when ``q`` rates higher than ``x``."""
    return _naive(q, x, train, hist, lambda a, b: float(a - b))


@dataclass(frozen=True)
class UserProfile:
    """Signature sums of one user: ``v[a - R_MIN]`` sums ``s_i`` over items rated ``a``."""

    v: np.ndarray
    n_items: int

    @property
    def V(self) -> np.ndarray:
        return self.v.sum(axis=0)


class Profiles:
    """Profiles of every user slot, stored as flat arrays for the batch kernels.

    ``v``: (n, 5, 5) signature sums; ``V``: (n, 5) totals; ``M``: (n, 5)
    rating-weighted totals ``sum_a a v[a]``; ``W``: (n, 25) flattened
    ``RSP @ v`` so that a SIM numerator is ``v_x.ravel() . W_y``.
    """

    def __init__(self, v: np.ndarray, n_items: np.ndarray):
        self.v = np.ascontiguousarray(v, dtype=np.float64)
        self.n_items = np.asarray(n_items, dtype=np.int64)
        self.V = self.v.sum(axis=1)
        self.M = np.einsum("a,nah->nh", RATING_VALUES, self.v)
        self.P = self.v.reshape(len(self.v), -1)
        self.W = np.einsum("ab,nbh->nah", rsp_matrix(), self.v).reshape(len(self.v), -1)

    def __len__(self):
        return len(self.v)

    def __getitem__(self, u: int) -> UserProfile:
        return UserProfile(self.v[u], int(self.n_items[u]))

    def save(self, path, user_ids=None) -> None:
        """Write a snapshot: ``.npz`` of little-endian float64 ``v`` (users x 5 x 5) and ``V``
        (users x 5), plus int64 ``n_items``. ``V`` is redundant and ignored on load."""
        arrays = {"v": self.v.astype("<f8"), "V": self.V.astype("<f8"), "n_items": self.n_items.astype("<i8")}
        if user_ids is not None:
            ids = np.asarray(user_ids)
            arrays["user_ids"] = ids.astype(str) if ids.dtype == object else ids
        np.savez(Path(path), **arrays)

    @classmethod
    def load(cls, path) -> tuple["Profiles", np.ndarray | None]:
        with np.load(Path(path), allow_pickle=False) as z:
            ids = z["user_ids"] if "user_ids" in z else None
            return cls(z["v"], z["n_items"]), ids


def build_user_profiles(train: RatingsTable, hist: ItemHistograms) -> Profiles:
    v = np.zeros((train.n_user_slots, BIN_COUNT, BIN_COUNT), dtype=np.float64)
    np.add.at(v, (train.users, train.ratings.astype(np.int64) - R_MIN), hist.signatures[train.items])
    n_items = np.bincount(train.users, minlength=train.n_user_slots)
    return Profiles(v, n_items)


def _fast(pq: UserProfile, px: UserProfile, weights: np.ndarray) -> MaybeScore:
    if pq.n_items == 0 or px.n_items == 0:
        return Unavailable.NO_RATINGS
    den = float(pq.V @ px.V)
    if den == 0.0:
        return Unavailable.ZERO_WEIGHT
    num = float(np.einsum("ab,ah,bh->", weights, pq.v, px.v))
    return num / den


_RSP = rsp_matrix()
_DIFF = diff_matrix()


def sim_fast(pq: UserProfile, px: UserProfile) -> MaybeScore:
    """SIM from two profiles; matches :func:`sim_naive` to float rounding."""
    return _fast(pq, px, _RSP)


def dif_fast(pq: UserProfile, px: UserProfile) -> MaybeScore:
    return _fast(pq, px, _DIFF)
