"""Ratings and trust ingestion, fold splitting, and train/test views.

User and item ids are remapped to dense indices at ingestion. A
:class:`RatingsTable` keeps both a user-major and an item-major CSR index over
the same records; train views derived from it share the parent's index space,
so profiles and trust adjacency line up across folds.
"""

from __future__ import annotations

import bz2
import gzip
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

log = logging.getLogger(__name__)

R_MIN = 1
R_MAX = 5


class ParseError(ValueError):
    """A malformed input line."""

    def __init__(self, lineno: int, line: str, why: str):
        super().__init__(f"line {lineno}: {why}: {line.strip()!r}")
        self.lineno = lineno


@dataclass
class ParseSummary:
    lines: int = 0
    loaded: int = 0
    rejected_out_of_range: int = 0
    duplicates: int = 0


def open_text(path: str | Path) -> IO[str]:
    """Open a plain, ``.bz2`` or ``.gz`` text file."""
    path = Path(path)
    if path.suffix == ".bz2":
        return bz2.open(path, "rt")
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path, "r")


def _lines(stream: IO[str] | str | Iterable[str]) -> Iterator[str]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return iter(stream)


def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stable grouping of record positions by ``keys``: (indptr, order)."""
    order = np.argsort(keys, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=indptr[1:])
    return indptr, order


class RatingsTable:
    """Immutable, dual-indexed sparse ratings store.

    ``users``/``items``/``ratings`` are parallel record arrays holding dense
    indices. ``user_ids``/``item_ids`` map dense indices back to the original
    identifiers. ``user_ptr``/``user_items``/``user_ratings`` is the user-major
    CSR index; ``item_ptr``/``item_users``/``item_ratings`` the item-major one.
    """

    def __init__(self, users, items, ratings, user_ids, item_ids):
        self.users = np.asarray(users, dtype=np.int64)
        self.items = np.asarray(items, dtype=np.int64)
        self.ratings = np.asarray(ratings, dtype=np.int8)
        self.user_ids = np.asarray(user_ids)
        self.item_ids = np.asarray(item_ids)
        for a in (self.users, self.items, self.ratings):
            a.flags.writeable = False

        self.user_ptr, order = _csr(self.users, self.n_user_slots)
        self.user_items = self.items[order]
        self.user_ratings = self.ratings[order]
        self.item_ptr, order = _csr(self.items, self.n_item_slots)
        self.item_users = self.users[order]
        self.item_ratings = self.ratings[order]

        self._user_index = None
        self._item_index = None

    @property
    def n_user_slots(self) -> int:
        return len(self.user_ids)

    @property
    def n_item_slots(self) -> int:
        return len(self.item_ids)

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    @property
    def n_users(self) -> int:
        """Users with at least one rating in this table."""
        return int(np.count_nonzero(np.diff(self.user_ptr)))

    @property
    def n_items(self) -> int:
        return int(np.count_nonzero(np.diff(self.item_ptr)))

    @property
    def sparsity(self) -> float:
        return 1.0 - self.n_ratings / (self.n_users * self.n_items)

    def __len__(self):
        return self.n_ratings

    def __repr__(self):
        return f"<RatingsTable users={self.n_users} items={self.n_items} ratings={self.n_ratings}>"

    @property
    def user_index(self) -> dict:
        if self._user_index is None:
            self._user_index = {uid: k for k, uid in enumerate(self.user_ids.tolist())}
        return self._user_index

    @property
    def item_index(self) -> dict:
        if self._item_index is None:
            self._item_index = {iid: k for k, iid in enumerate(self.item_ids.tolist())}
        return self._item_index

    def by_user(self, user_id) -> list[tuple[object, int]]:
        """``[(item_id, rating), ...]`` rated by ``user_id`` (empty if unknown)."""
        u = self.user_index.get(user_id)
        if u is None:
            return []
        s, e = self.user_ptr[u], self.user_ptr[u + 1]
        return list(zip(self.item_ids[self.user_items[s:e]].tolist(), self.user_ratings[s:e].tolist()))

    def by_item(self, item_id) -> list[tuple[object, int]]:
        """``[(user_id, rating), ...]`` for ``item_id`` (empty if unknown)."""
        i = self.item_index.get(item_id)
        if i is None:
            return []
        s, e = self.item_ptr[i], self.item_ptr[i + 1]
        return list(zip(self.user_ids[self.item_users[s:e]].tolist(), self.item_ratings[s:e].tolist()))

    def records(self) -> Iterator[tuple[object, object, int]]:
        uids, iids = self.user_ids.tolist(), self.item_ids.tolist()
        for u, i, r in zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()):
            yield uids[u], iids[i], r

    def subset(self, mask_or_index) -> "RatingsTable":
        """Records selected by a boolean mask or index array, same id space."""
        sel = np.asarray(mask_or_index)
        t = RatingsTable(self.users[sel], self.items[sel], self.ratings[sel], self.user_ids, self.item_ids)
        t._user_index, t._item_index = self._user_index, self._item_index
        return t

    def write(self, out: IO[str]) -> None:
        for u, i, r in self.records():
            out.write(f"{u} {i} {r}\n")


@dataclass
class TrustGraph:
    """Directed truster -> trustees adjacency, keyed by original user ids."""

    out_edges: dict = field(default_factory=dict)
    n_lines: int = 0
    n_self_edges: int = 0
    n_duplicates: int = 0

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.out_edges.values())

    def trustees(self, user_id) -> set:
        return self.out_edges.get(user_id, set())

    def to_csr(self, table: RatingsTable) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency over ``table``'s dense user indices.

        Users unknown to the table have no ratings, so they can never carry a
        usable similarity; edges touching them are dropped.
        """
        index = table.user_index
        n = table.n_user_slots
        rows = [[] for _ in range(n)]
        dropped = 0
        for a, bs in self.out_edges.items():
            ia = index.get(a)
            if ia is None:
                dropped += len(bs)
                continue
            for b in bs:
                ib = index.get(b)
                if ib is None:
                    dropped += 1
                else:
                    rows[ia].append(ib)
        if dropped:
            log.debug("dropped %d trust edges touching users without ratings", dropped)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum([len(r) for r in rows], out=indptr[1:])
        nbrs = np.fromiter((b for r in rows for b in sorted(r)), dtype=np.int64, count=int(indptr[-1]))
        return indptr, nbrs


def _parse_id(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_ratings(stream, summary: ParseSummary | None = None) -> RatingsTable:
    """Parse ``user item rating`` lines into a :class:`RatingsTable`.

    Later duplicates of a ``(user, item)`` pair replace earlier ones. Ratings
    outside ``[R_MIN, R_MAX]`` are skipped and counted in ``summary``.
    """
    summary = summary if summary is not None else ParseSummary()
    seen: dict = {}
    for lineno, line in enumerate(_lines(stream), 1):
        parts = line.split()
        if not parts:
            continue
        summary.lines += 1
        if len(parts) < 3:
            raise ParseError(lineno, line, "expected 'user item rating'")
        try:
            r = int(parts[2])
        except ValueError:
            raise ParseError(lineno, line, "rating is not an integer") from None
        if not R_MIN <= r <= R_MAX:
            summary.rejected_out_of_range += 1
            continue
        key = (_parse_id(parts[0]), _parse_id(parts[1]))
        if key in seen:
            summary.duplicates += 1
        seen[key] = r
    summary.loaded = len(seen)
    if summary.rejected_out_of_range:
        log.warning("skipped %d ratings outside [%d, %d]", summary.rejected_out_of_range, R_MIN, R_MAX)
    return _table_from_records(seen)


def _table_from_records(seen: dict) -> RatingsTable:
    uidx: dict = {}
    iidx: dict = {}
    n = len(seen)
    users = np.empty(n, dtype=np.int64)
    items = np.empty(n, dtype=np.int64)
    ratings = np.empty(n, dtype=np.int8)
    for k, ((u, i), r) in enumerate(seen.items()):
        users[k] = uidx.setdefault(u, len(uidx))
        items[k] = iidx.setdefault(i, len(iidx))
        ratings[k] = r
    user_ids = _id_array(list(uidx))
    item_ids = _id_array(list(iidx))
    t = RatingsTable(users, items, ratings, user_ids, item_ids)
    t._user_index, t._item_index = uidx, iidx
    return t


def _id_array(ids: list) -> np.ndarray:
    if all(isinstance(x, int) for x in ids):
        return np.array(ids, dtype=np.int64)
    return np.array(ids, dtype=object)


def table_from_triples(triples: Iterable[tuple]) -> RatingsTable:
    """Build a table from ``(user, item, rating)`` tuples (last duplicate wins)."""
    seen: dict = {}
    for u, i, r in triples:
        if not R_MIN <= int(r) <= R_MAX:
            raise ValueError(f"rating {r} outside [{R_MIN}, {R_MAX}]")
        seen[(u, i)] = int(r)
    return _table_from_records(seen)


def parse_trust(stream) -> TrustGraph:
    """Parse ``truster trustee [weight]`` lines; weights are ignored."""
    g = TrustGraph()
    for lineno, line in enumerate(_lines(stream), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise ParseError(lineno, line, "expected 'truster trustee [weight]'")
        g.n_lines += 1
        a, b = _parse_id(parts[0]), _parse_id(parts[1])
        if a == b:
            g.n_self_edges += 1
            g.out_edges.setdefault(a, set())
            continue
        out = g.out_edges.setdefault(a, set())
        if b in out:
            g.n_duplicates += 1
        out.add(b)
    return g


def trust_from_edges(edges: Iterable[tuple]) -> TrustGraph:
    return parse_trust([f"{a} {b}" for a, b in edges])


def load_ratings(path, summary: ParseSummary | None = None) -> RatingsTable:
    with open_text(path) as f:
        return parse_ratings(f, summary)


def load_trust(path) -> TrustGraph:
    with open_text(path) as f:
        return parse_trust(f)


@dataclass(frozen=True)
class FoldSplit:
    fold_of: np.ndarray
    k: int
    seed: int | None

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)

    def records_in(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def write(self, out: IO[str]) -> None:
        for idx, f in enumerate(self.fold_of.tolist()):
            out.write(f"{idx} {f}\n")

    @classmethod
    def read(cls, stream, k: int | None = None, seed: int | None = None) -> "FoldSplit":
        pairs = [line.split() for line in _lines(stream) if line.strip()]
        fold_of = np.empty(len(pairs), dtype=np.int64)
        for idx, f in pairs:
            fold_of[int(idx)] = int(f)
        return cls(fold_of, k if k is not None else int(fold_of.max()) + 1, seed)


def split_folds(table: RatingsTable, k: int, seed: int) -> FoldSplit:
    """Seeded random partition of the rating records into ``k`` near-equal folds."""
    n = table.n_ratings
    if k < 2 or k > n:
        raise ValueError(f"k must be in [2, {n}], got {k}")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    for f, chunk in enumerate(np.array_split(perm, k)):
        fold_of[chunk] = f
    return FoldSplit(fold_of, k, seed)


@dataclass(frozen=True)
class TestSet:
    """Held-out records as parallel dense-index arrays."""

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray

    def __len__(self):
        return len(self.ratings)

    def sample(self, n: int, seed: int) -> "TestSet":
        """Seeded uniform subsample of ``n`` records, kept in record order."""
        if n >= len(self):
            return self
        idx = np.sort(np.random.default_rng(seed).permutation(len(self))[:n])
        return TestSet(self.users[idx], self.items[idx], self.ratings[idx])


TestSet.__test__ = False  # not a pytest class


def train_test_views(
    table: RatingsTable, split: FoldSplit, test_fold: int, train_folds: Iterable[int] | None = None
) -> tuple[RatingsTable, TestSet]:
    """Train table over ``train_folds`` (default: all others) and the test fold's records."""
    if train_folds is None:
        train_folds = [f for f in range(split.k) if f != test_fold]
    train_folds = sorted(set(train_folds))
    if not 0 <= test_fold < split.k or any(not 0 <= f < split.k for f in train_folds):
        raise ValueError(f"fold ids must be in [0, {split.k})")
    if test_fold in train_folds:
        raise ValueError(f"test fold {test_fold} overlaps train folds {train_folds}")
    train = table.subset(np.isin(split.fold_of, train_folds))
    idx = split.records_in(test_fold)
    test = TestSet(table.users[idx], table.items[idx], table.ratings[idx])
    return train, test
