"""Hot split-checking loops.

Value matrices hold one row per oracle string and one column per functional
input; ``-1`` marks divergence.  Two rows e-split when some column is defined
in both and differs.

``LOWSPEED_BACKEND=numpy`` forces the pure-numpy path; the default uses numba
when it imports.  Both paths return identical results, including the
inspection counts fed into the cost ledgers.
"""

from __future__ import annotations

import os

import numpy as np

UNDEF = -1

_requested = os.environ.get("LOWSPEED_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError
    from numba import njit
except ImportError:
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


# -- numpy reference path ----------------------------------------------------

def _np_split_witness(a, b):
    both = (a != UNDEF) & (b != UNDEF) & (a != b)
    idx = np.flatnonzero(both)
    return int(idx[0]) if idx.size else -1


def _np_splits_all(rows, n, v):
    """Does ``v`` split with each of ``rows[:n]``?  Returns (ok, compared)."""
    if n == 0:
        return True, 0
    r = rows[:n]
    ok = ((r != UNDEF) & (v != UNDEF) & (r != v)).any(axis=1)
    bad = np.flatnonzero(~ok)
    if bad.size:
        return False, int(bad[0]) + 1
    return True, n


def _np_nonsplit_pairs(V, group, mask, limit):
    """Pairs ``i<j`` with ``mask`` on both, ``group`` differing, and no split."""
    m = V.shape[0]
    out = []
    count = 0
    defined = V != UNDEF
    for i in range(m):
        if not mask[i]:
            continue
        rest = slice(i + 1, m)
        sel = mask[rest] & (group[rest] != group[i])
        split = (defined[rest] & defined[i] & (V[rest] != V[i])).any(axis=1)
        bad = np.flatnonzero(sel & ~split)
        count += int(bad.size)
        for j in bad[: max(0, limit - len(out))]:
            out.append((i, i + 1 + int(j)))
    return count, out


def _np_lifted_nonsplit(V, anc, main, limit):
    """Pairs of rows whose branches share a main/main step after diverging
    but do not split.  ``anc[u, l]`` is the ancestor id of ``u`` at level
    ``l``; ``main[u, l]`` says the step into level ``l`` is a main child."""
    m, depth = anc.shape[0], anc.shape[1] - 1
    defined = V != UNDEF
    out, count, covered = [], 0, 0
    for i in range(m):
        rest = slice(i + 1, m)
        same = anc[rest] == anc[i]
        # divergence level: last level where ancestors agree
        d = same.sum(axis=1) - 1
        levels = np.arange(depth + 1)
        after = levels[None, :] > d[:, None]
        both = main[rest] & main[i] & after
        need = both.any(axis=1)
        split = (defined[rest] & defined[i] & (V[rest] != V[i])).any(axis=1)
        covered += int(need.sum())
        bad = np.flatnonzero(need & ~split)
        count += int(bad.size)
        for j in bad[: max(0, limit - len(out))]:
            out.append((i, i + 1 + int(j)))
    return count, covered, out


# -- numba path --------------------------------------------------------------

if njit is not None:

    @njit(cache=True)
    def _nb_split_witness(a, b):
        for x in range(a.shape[0]):
            if a[x] != UNDEF and b[x] != UNDEF and a[x] != b[x]:
                return x
        return -1

    @njit(cache=True)
    def _nb_splits_all_impl(rows, n, v):
        for i in range(n):
            hit = False
            for x in range(v.shape[0]):
                if rows[i, x] != UNDEF and v[x] != UNDEF and rows[i, x] != v[x]:
                    hit = True
                    break
            if not hit:
                return False, i + 1
        return True, n

    @njit(cache=True)
    def _nb_rows_split(V, i, j, w):
        # branch-free so the loop vectorizes; early exit is slower here
        hit = 0
        for x in range(w):
            a = V[i, x]
            b = V[j, x]
            hit |= (a != b) & (a != UNDEF) & (b != UNDEF)
        return hit != 0

    @njit(cache=True)
    def _nb_nonsplit_scan(V, group, mask, limit, out):
        m, w = V.shape
        count = 0
        k = 0
        for i in range(m):
            if not mask[i]:
                continue
            for j in range(i + 1, m):
                if not mask[j] or group[j] == group[i]:
                    continue
                if not _nb_rows_split(V, i, j, w):
                    if k < limit:
                        out[k, 0] = i
                        out[k, 1] = j
                        k += 1
                    count += 1
        return count, k

    def _nb_nonsplit_pairs(V, group, mask, limit):
        out = np.zeros((max(limit, 1), 2), dtype=np.int64)
        count, k = _nb_nonsplit_scan(V, group, mask, limit, out)
        return int(count), [(int(out[i, 0]), int(out[i, 1])) for i in range(k)]

    @njit(cache=True)
    def _nb_lifted_scan(V, anc, main, limit, out):
        m, w = V.shape
        depth = anc.shape[1] - 1
        count = 0
        covered = 0
        k = 0
        for i in range(m):
            for j in range(i + 1, m):
                d = 0
                while d < depth and anc[i, d + 1] == anc[j, d + 1]:
                    d += 1
                need = False
                for l in range(d + 1, depth + 1):
                    if main[i, l] and main[j, l]:
                        need = True
                        break
                if not need:
                    continue
                covered += 1
                if not _nb_rows_split(V, i, j, w):
                    count += 1
                    if k < limit:
                        out[k, 0] = i
                        out[k, 1] = j
                        k += 1
        return count, covered, k

    def _nb_lifted_nonsplit(V, anc, main, limit):
        out = np.zeros((max(limit, 1), 2), dtype=np.int64)
        count, covered, k = _nb_lifted_scan(V, anc, main, limit, out)
        return int(count), int(covered), [(int(out[i, 0]), int(out[i, 1])) for i in range(k)]

    def _nb_splits_all(rows, n, v):
        ok, c = _nb_splits_all_impl(rows, n, v)
        return bool(ok), int(c)


def _as2(V):
    return np.ascontiguousarray(V, dtype=np.int64)


def split_witness(a, b) -> int:
    """Least column on which rows ``a`` and ``b`` split, or ``-1``."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if BACKEND == "numba":
        return int(_nb_split_witness(a, b))
    return _np_split_witness(a, b)


def splits_all(rows, n: int, v) -> tuple[bool, int]:
    """Check ``v`` against the first ``n`` rows, stopping at the first failure.

    Returns ``(ok, rows_compared)``.
    """
    v = np.ascontiguousarray(v, dtype=np.int64)
    if BACKEND == "numba":
        return _nb_splits_all(rows, n, v)
    return _np_splits_all(rows, n, v)


def nonsplit_pairs(V, group, mask=None, limit: int = 16):
    """Count non-splitting pairs between rows of different groups."""
    V = _as2(V)
    group = np.ascontiguousarray(group, dtype=np.int64)
    if mask is None:
        mask = np.ones(V.shape[0], dtype=np.bool_)
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if BACKEND == "numba":
        return _nb_nonsplit_pairs(V, group, mask, limit)
    return _np_nonsplit_pairs(V, group, mask, limit)


def lifted_nonsplit(V, anc, main, limit: int = 16):
    """Returns ``(violations, pairs covered, first violating pairs)``."""
    V = _as2(V)
    anc = np.ascontiguousarray(anc, dtype=np.int64)
    main = np.ascontiguousarray(main, dtype=np.bool_)
    if BACKEND == "numba":
        return _nb_lifted_nonsplit(V, anc, main, limit)
    return _np_lifted_nonsplit(V, anc, main, limit)


def any_two_distinct(V) -> bool:
    """Does some column hold two different defined values?

    Equivalent to "some pair of rows splits", at linear cost.
    """
    V = np.asarray(V)
    if V.shape[0] < 2:
        return False
    d = V != UNDEF
    hi = np.where(d, V, np.iinfo(np.int64).min).max(axis=0)
    lo = np.where(d, V, np.iinfo(np.int64).max).min(axis=0)
    return bool((d.any(axis=0) & (lo < hi)).any())


def all_pairs_split(V) -> bool:
    V = _as2(V)
    count, _ = nonsplit_pairs(V, np.arange(V.shape[0]), None, limit=1)
    return count == 0


def with_backend(name: str):
    """Return a namespace of kernels bound to one backend (for benchmarks)."""
    if name == "numba" and njit is None:
        raise RuntimeError("numba is not importable")

    class _K:
        pass

    k = _K()
    if name == "numba":
        k.splits_all = lambda rows, n, v: _nb_splits_all(rows, n, np.ascontiguousarray(v, dtype=np.int64))
        k.nonsplit_pairs = lambda V, g, m=None, limit=16: _nb_nonsplit_pairs(
            _as2(V), np.ascontiguousarray(g, dtype=np.int64),
            np.ones(len(V), np.bool_) if m is None else m, limit)
        k.lifted_nonsplit = lambda V, a, m, limit=16: _nb_lifted_nonsplit(
            _as2(V), np.ascontiguousarray(a, dtype=np.int64), np.ascontiguousarray(m, dtype=np.bool_), limit)
    else:
        k.splits_all = lambda rows, n, v: _np_splits_all(rows, n, np.asarray(v, dtype=np.int64))
        k.nonsplit_pairs = lambda V, g, m=None, limit=16: _np_nonsplit_pairs(
            _as2(V), np.asarray(g, dtype=np.int64),
            np.ones(len(V), np.bool_) if m is None else m, limit)
        k.lifted_nonsplit = lambda V, a, m, limit=16: _np_lifted_nonsplit(
            _as2(V), np.asarray(a, dtype=np.int64), np.asarray(m, dtype=np.bool_), limit)
    return k
