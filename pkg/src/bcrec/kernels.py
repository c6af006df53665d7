"""Batch prediction kernels.

Two backends evaluate the same per-record computation as
:func:`bcrec.predict.predict_method_a` / ``predict_method_b``:

* ``numba``: explicit loops compiled with ``@njit(nogil=True)``.
* ``numpy``: per-record matrix products over the scorer and trustee sets.

The numba backend is used when numba imports cleanly, unless the environment
variable ``BCREC_DISABLE_NUMBA`` is set to a non-empty value other than ``0``.
Records are split into fixed chunks and fanned out over a thread pool; each
record is computed independently, so results do not depend on ``jobs``.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .similarity import Profiles

log = logging.getLogger(__name__)

COVERED = 0
ITEM_UNSEEN = 1
NO_USABLE_SCORERS = 2
REASONS = {ITEM_UNSEEN: "item-unseen", NO_USABLE_SCORERS: "no-usable-scorers"}

CHUNK = 2048


def _numba_disabled() -> bool:
    return os.environ.get("BCREC_DISABLE_NUMBA", "") not in ("", "0")


try:
    if _numba_disabled():
        raise ImportError("disabled by BCREC_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy backend

def _pair_den(V, xs, ys):
    return V[xs] @ V[ys].T


def _numpy_record(q, t, method_b, social, include_scorer, item_ptr, item_users, item_ratings,
                  trust_ptr, trust_nbrs, P, W, V, M, n_items):
    s, e = item_ptr[t], item_ptr[t + 1]
    ys = item_users[s:e]
    rs = item_ratings[s:e].astype(np.float64)
    keep = ys != q
    ys, rs = ys[keep], rs[keep]
    if len(ys) == 0:
        return np.nan, ITEM_UNSEEN

    den_q = V[ys] @ V[q]
    ok_q = (n_items[q] > 0) & (n_items[ys] > 0) & (den_q != 0.0)
    safe = np.where(ok_q, den_q, 1.0)
    if method_b:
        direct = (V[ys] @ M[q] - M[ys] @ V[q]) / safe
    else:
        direct = (W[ys] @ P[q]) / safe

    if social:
        xs = trust_nbrs[trust_ptr[q] : trust_ptr[q + 1]]
        xs = xs[xs != q]
    if social and len(xs):
        den_xq = V[xs] @ V[q]
        ok_x = (n_items[xs] > 0) & (n_items[q] > 0) & (den_xq != 0.0)
        w_x = (P[xs] @ W[q]) / np.where(ok_x, den_xq, 1.0)

        den_xy = _pair_den(V, xs, ys)
        ok_xy = (n_items[xs] > 0)[:, None] & (n_items[ys] > 0)[None, :] & (den_xy != 0.0)
        safe_xy = np.where(ok_xy, den_xy, 1.0)
        if method_b:
            inner = (M[xs] @ V[ys].T - V[xs] @ M[ys].T) / safe_xy
        else:
            inner = (P[xs] @ W[ys].T) / safe_xy
        valid = ok_x[:, None] & ok_xy
        if not include_scorer:
            valid &= xs[:, None] != ys[None, :]
        wm = np.where(valid, w_x[:, None], 0.0)
        agg_num = (wm * np.where(valid, inner, 0.0)).sum(axis=0)
        agg_den = wm.sum(axis=0)
        ok_agg = valid.any(axis=0) & (agg_den != 0.0)
        agg = agg_num / np.where(ok_agg, agg_den, 1.0)

        both = ok_q & ok_agg
        combined = np.where(both, (direct + agg) / 2, np.where(ok_q, direct, agg))
        ok = ok_q | ok_agg
    else:
        combined, ok = direct, ok_q

    if method_b:
        return float(np.sum(rs + np.where(ok, combined, 0.0)) / len(ys)), COVERED
    if not ok.any():
        return np.nan, NO_USABLE_SCORERS
    w = combined[ok]
    den = w.sum()
    if den == 0.0:
        return np.nan, NO_USABLE_SCORERS
    return float(w @ rs[ok] / den), COVERED


def _numpy_batch(qs, ts, method_b, social, include_scorer, *arrays):
    raw = np.empty(len(qs), dtype=np.float64)
    code = np.empty(len(qs), dtype=np.int8)
    for k in range(len(qs)):
        raw[k], code[k] = _numpy_record(qs[k], ts[k], method_b, social, include_scorer, *arrays)
    return raw, code


# --------------------------------------------------------------------------
# numba backend

if HAVE_NUMBA:
    # reassociation lets the short dot products vectorize; NaN/inf semantics kept
    _FAST = {"reassoc", "contract", "arcp", "nsz"}
    NB = 5
    NP = 25

    @njit(nogil=True, cache=True, fastmath=_FAST)
    def _nb_score(method_b, P, W, V, M, n_items, x, y):
        """SIM(x, y) or DIF(x, y) and whether it is available."""
        if n_items[x] == 0 or n_items[y] == 0:
            return 0.0, False
        den = 0.0
        for h in range(NB):
            den += V[x, h] * V[y, h]
        if den == 0.0:
            return 0.0, False
        num = 0.0
        if method_b:
            for h in range(NB):
                num += M[x, h] * V[y, h] - V[x, h] * M[y, h]
        else:
            for k in range(NP):
                num += P[x, k] * W[y, k]
        return num / den, True

    @njit(nogil=True, cache=True, fastmath=_FAST)
    def _nb_trust_agg(method_b, include_scorer, y, xs, w_x, XP, XV, XM, W, V, M, n_items):
        """Weighted average of the trustees' scores against scorer ``y``.

        ``xs``/``w_x`` hold only trustees with an available weight; ``XP``,
        ``XV``, ``XM`` are their profile rows gathered contiguously.
        """
        if n_items[y] == 0:
            return 0.0, False
        num = 0.0
        den = 0.0
        used = 0
        for a in range(len(xs)):
            if xs[a] == y and not include_scorer:
                continue
            d = 0.0
            for h in range(NB):
                d += XV[a, h] * V[y, h]
            if d == 0.0:
                continue
            s = 0.0
            if method_b:
                for h in range(NB):
                    s += XM[a, h] * V[y, h] - XV[a, h] * M[y, h]
            else:
                for k in range(NP):
                    s += XP[a, k] * W[y, k]
            num += w_x[a] * (s / d)
            den += w_x[a]
            used += 1
        if used == 0 or den == 0.0:
            return 0.0, False
        return num / den, True

    @njit(nogil=True, cache=True)
    def _nb_batch(qs, ts, method_b, social, include_scorer, item_ptr, item_users, item_ratings,
                  trust_ptr, trust_nbrs, P, W, V, M, n_items):
        n = len(qs)
        raw = np.empty(n, dtype=np.float64)
        code = np.zeros(n, dtype=np.int8)
        for k in range(n):
            q = qs[k]
            t = ts[k]
            s = item_ptr[t]
            e = item_ptr[t + 1]
            n_scorers = 0
            for p in range(s, e):
                if item_users[p] != q:
                    n_scorers += 1
            if n_scorers == 0:
                raw[k] = np.nan
                code[k] = ITEM_UNSEEN
                continue

            # trustees with a usable weight SIM(x, q), gathered contiguously
            cand = trust_nbrs[trust_ptr[q] : trust_ptr[q + 1]] if social else trust_nbrs[:0]
            xs = np.empty(len(cand), dtype=np.int64)
            w_x = np.empty(len(cand))
            nx = 0
            for a in range(len(cand)):
                x = cand[a]
                if x == q:
                    continue
                w, ok = _nb_score(False, P, W, V, M, n_items, x, q)
                if ok:
                    xs[nx] = x
                    w_x[nx] = w
                    nx += 1
            xs = xs[:nx]
            w_x = w_x[:nx]
            XP = np.empty((nx, NP))
            XV = np.empty((nx, NB))
            XM = np.empty((nx, NB))
            for a in range(nx):
                XP[a] = P[xs[a]]
                XV[a] = V[xs[a]]
                XM[a] = M[xs[a]]

            num = 0.0
            den = 0.0
            used = 0
            for p in range(s, e):
                y = item_users[p]
                if y == q:
                    continue
                r = float(item_ratings[p])
                d, ok_d = _nb_score(method_b, P, W, V, M, n_items, q, y)
                ok_a = False
                agg = 0.0
                if nx > 0:
                    agg, ok_a = _nb_trust_agg(method_b, include_scorer, y, xs, w_x, XP, XV, XM, W, V, M, n_items)
                if ok_d and ok_a:
                    c = (d + agg) / 2
                elif ok_d:
                    c = d
                elif ok_a:
                    c = agg
                elif method_b:
                    c = 0.0
                else:
                    continue
                if method_b:
                    num += r + c
                else:
                    num += c * r
                    den += c
                    used += 1
            if method_b:
                raw[k] = num / n_scorers
            elif used == 0 or den == 0.0:
                raw[k] = np.nan
                code[k] = NO_USABLE_SCORERS
            else:
                raw[k] = num / den
        return raw, code


# --------------------------------------------------------------------------

def kernel_arrays(train, profiles: Profiles, trust) -> tuple:
    """Flat arrays consumed by both backends, in kernel argument order."""
    return (
        train.item_ptr,
        train.item_users,
        train.item_ratings,
        trust.indptr,
        trust.nbrs,
        np.ascontiguousarray(profiles.P),
        np.ascontiguousarray(profiles.W),
        np.ascontiguousarray(profiles.V),
        np.ascontiguousarray(profiles.M),
        profiles.n_items,
    )


def predict_batch(qs, ts, arrays: tuple, method: str, social: bool, include_scorer: bool = False,
                  backend: str | None = None, jobs: int = 1, progress_every: int = 0):
    """Raw predictions and reason codes for dense ``(user, item)`` pairs.

    Uncovered records get ``nan`` and a nonzero code (see ``REASONS``).
    """
    backend = backend or DEFAULT_BACKEND
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    fn = _nb_batch if backend == "numba" else _numpy_batch
    qs = np.ascontiguousarray(qs, dtype=np.int64)
    ts = np.ascontiguousarray(ts, dtype=np.int64)
    method_b = method == "B"
    n = len(qs)
    bounds = list(range(0, n, CHUNK)) + [n]
    chunks = list(zip(bounds[:-1], bounds[1:]))

    def run(se):
        s, e = se
        return fn(qs[s:e], ts[s:e], method_b, social, include_scorer, *arrays)

    raw = np.empty(n, dtype=np.float64)
    code = np.empty(n, dtype=np.int8)
    done = 0
    next_report = progress_every
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for (s, e), (r, c) in zip(chunks, pool.map(run, chunks)):
            raw[s:e], code[s:e] = r, c
            done = e
            if progress_every and done >= next_report:
                log.info("predicted %d/%d records", done, n)
                next_report += progress_every
    return raw, code
