"""Exact cut oracles by exhaustive subset enumeration (n <= 24).

Cut weights of all subsets are built with a doubling recurrence: adding
vertex k to a set M changes the cut by ``d_k - 2 * w(k, M)``. Only sets
avoiding vertex n-1 are enumerated; their complements cover the rest.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .graph_core import CutResult, Graph, GraphError, cut_quality

MAX_N = 24


def _check_n(n: int) -> None:
    if n > MAX_N:
        raise GraphError(f"exhaustive oracle limited to n <= {MAX_N}, got n = {n}")
    if n < 2:
        raise GraphError("need at least 2 vertices")


def subset_tables(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Cut weight and size for every mask over vertices 0..n-2 (vertex n-1 excluded)."""
    _check_n(g.n)
    return _tables(g.weights.tobytes(), g.n)


@lru_cache(maxsize=8)
def _tables(wbytes: bytes, n: int) -> tuple[np.ndarray, np.ndarray]:
    w = np.frombuffer(wbytes).reshape(n, n)
    d = w.sum(axis=1)
    k = n - 1
    cut = np.zeros(1 << k)
    size = np.zeros(1 << k, dtype=np.int8)
    for v in range(k):
        lo = 1 << v
        # w(v, M) for every M over vertices < v, built by the same doubling
        wv = np.zeros(1)
        for j in range(v):
            wv = np.concatenate([wv, wv + w[v, j]])
        cut[lo:2 * lo] = cut[:lo] + d[v] - 2 * wv
        size[lo:2 * lo] = size[:lo] + 1
    cut.setflags(write=False)
    size.setflags(write=False)
    return cut, size


def _mask_to_set(mask: int, n: int, complement: bool) -> tuple[int, ...]:
    inside = [i for i in range(n - 1) if mask >> i & 1]
    if complement:
        s = set(inside)
        return tuple(i for i in range(n) if i not in s)
    return tuple(inside)


def _argmin_sets(g: Graph, score: np.ndarray, sizes: np.ndarray, comp_score: np.ndarray,
                 comp_sizes: np.ndarray, valid: np.ndarray, comp_valid: np.ndarray) -> tuple[int, ...]:
    """Minimize score over masks and complements; tie-break smallest size then lexicographic."""
    n = g.n
    best = min(score[valid].min(initial=np.inf), comp_score[comp_valid].min(initial=np.inf))
    if not np.isfinite(best):
        raise GraphError("no admissible set")
    tol = 1e-12 * max(1.0, abs(best))
    hit = valid & (score <= best + tol)
    chit = comp_valid & (comp_score <= best + tol)
    kmin = min(sizes[hit].min(initial=n), comp_sizes[chit].min(initial=n))
    cands = [_mask_to_set(int(m), n, False) for m in np.flatnonzero(hit & (sizes == kmin))]
    cands += [_mask_to_set(int(m), n, True) for m in np.flatnonzero(chit & (comp_sizes == kmin))]
    return min(cands)


def _min_ratio(g: Graph, lo: int, hi: int, measure: str) -> CutResult:
    """Minimize a cut ratio over sets with lo <= |S| <= hi.

    ``measure`` is "sparsity", "expansion" (denominator min(|S|, n-|S|)) or
    "per_size" (denominator |S|).
    """
    n = g.n
    cut, size = subset_tables(g)
    s = size.astype(float)
    cs = n - s
    with np.errstate(divide="ignore", invalid="ignore"):
        if measure == "sparsity":
            score = n * cut / (s * (n - s))
            comp = n * cut / (cs * (n - cs))
        elif measure == "per_size":
            score = cut / s
            comp = cut / cs
        else:
            score = cut / np.minimum(s, n - s)
            comp = cut / np.minimum(cs, n - cs)
    valid = (size >= lo) & (size <= hi) & (size > 0)
    comp_valid = (cs >= lo) & (cs <= hi) & (cs < n)
    S = _argmin_sets(g, score, size, comp, cs, valid, comp_valid)
    return cut_quality(g, S)


def brute_sparsest(g: Graph) -> CutResult:
    """Sparsest cut over 0 < |S| <= n/2; smallest set then lexicographic on ties."""
    _check_n(g.n)
    return _min_ratio(g, 1, g.n // 2, "sparsity")


def brute_set_range(g: Graph, lo: int, hi: int, measure: str = "expansion") -> CutResult:
    _check_n(g.n)
    lo = max(int(np.ceil(lo - 1e-12)), 1)
    hi = min(int(np.floor(hi + 1e-12)), g.n - 1)
    if lo > hi:
        raise GraphError(f"empty size range [{lo}, {hi}]")
    return _min_ratio(g, lo, hi, measure)


def brute_small_set(g: Graph, r: float) -> tuple[float, float, CutResult, CutResult]:
    """(phi_r, Phi_r, sparsity witness, expansion witness) over 1 <= |S| <= floor(n/r)."""
    _check_n(g.n)
    k = int(np.floor(g.n / r + 1e-12))
    if k < 1:
        raise GraphError(f"floor(n/r) = 0 for n = {g.n}, r = {r}")
    k = min(k, g.n - 1)
    sp = _min_ratio(g, 1, k, "sparsity")
    ex = _min_ratio(g, 1, k, "expansion")
    return sp.sparsity, ex.expansion, sp, ex


def brute_balanced(g: Graph, c: float) -> CutResult:
    """Minimum expansion over sets with cn <= |S| <= n/2."""
    _check_n(g.n)
    lo = int(np.ceil(c * g.n - 1e-12))
    if lo > g.n / 2:
        raise GraphError(f"cn = {c * g.n} exceeds n/2")
    return _min_ratio(g, max(lo, 1), g.n // 2, "expansion")
