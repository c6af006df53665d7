"""Trust-set aggregates: similarity-weighted averages over the query user's trustees."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .similarity import MaybeScore, Profiles, Unavailable, available, dif_fast, sim_fast


@dataclass(frozen=True)
class TrustAggregate:
    value: MaybeScore
    n_contributing: int = 0
    n_skipped: int = 0

    @property
    def available(self) -> bool:
        return available(self.value)


def _aggregate(q: int, trustees: Iterable[int], t: int, profiles: Profiles, inner: Callable,
               include_scorer: bool) -> TrustAggregate:
    pq, pt = profiles[q], profiles[t]
    num = den = 0.0
    used = skipped = 0
    for x in sorted(trustees):
        if x == q or (x == t and not include_scorer):
            continue
        px = profiles[x]
        w = sim_fast(px, pq)
        term = inner(px, pt)
        if not (available(w) and available(term)):
            skipped += 1
            continue
        num += w * term
        den += w
        used += 1
    if used == 0 or den == 0.0:
        return TrustAggregate(Unavailable.ZERO_WEIGHT if used else Unavailable.NO_RATINGS, used, skipped)
    return TrustAggregate(num / den, used, skipped)


def tsim(q: int, trustees: Iterable[int], t: int, profiles: Profiles, include_scorer: bool = False) -> TrustAggregate:
    """Average of SIM(x, t) over trustees x of q, weighted by SIM(x, q).

    A trustee equal to ``t`` is left out unless ``include_scorer`` is set;
    trustees whose weight or term is unavailable are skipped.
    """
    return _aggregate(q, trustees, t, profiles, sim_fast, include_scorer)


def tdif(q: int, trustees: Iterable[int], t: int, profiles: Profiles, include_scorer: bool = False) -> TrustAggregate:
    """Average of DIF(x, t) over trustees x of q, weighted by SIM(x, q)."""
    return _aggregate(q, trustees, t, profiles, dif_fast, include_scorer)
