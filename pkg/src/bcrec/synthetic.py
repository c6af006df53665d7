"""Synthetic ratings/trust data with Epinions-like skew, for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .data import RatingsTable, TrustGraph, table_from_triples, trust_from_edges

# approximate rating-value mix of review-site data: mostly 4s and 5s
RATING_MIX = np.array([0.08, 0.08, 0.13, 0.30, 0.41])


def synthetic_dataset(n_users: int = 2000, n_items: int = 5000, n_ratings: int = 25000,
                      n_trust: int = 15000, seed: int = 0) -> tuple[RatingsTable, TrustGraph]:
    """Power-law user activity and item popularity; a user's ratings share a personal bias."""
    rng = np.random.default_rng(seed)
    u_w = rng.pareto(1.2, n_users) + 1
    i_w = rng.pareto(1.0, n_items) + 1
    users = rng.choice(n_users, size=n_ratings, p=u_w / u_w.sum())
    items = rng.choice(n_items, size=n_ratings, p=i_w / i_w.sum())
    bias = rng.normal(0, 0.7, n_users)
    base = rng.choice(5, size=n_ratings, p=RATING_MIX) + 1
    ratings = np.clip(np.rint(base + bias[users]), 1, 5).astype(int)
    table = table_from_triples(zip(users.tolist(), items.tolist(), ratings.tolist()))

    a = rng.choice(n_users, size=n_trust, p=u_w / u_w.sum())
    b = rng.choice(n_users, size=n_trust, p=u_w / u_w.sum())
    trust = trust_from_edges(zip(a.tolist(), b.tolist()))
    return table, trust
