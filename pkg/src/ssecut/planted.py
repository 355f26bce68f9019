"""Regular graphs with a planted sparse cut between two expander sides.

Each side is a random regular multigraph: a union of random perfect
matchings on an even side, a circulant with random offsets on an odd side.
Cross edges either come from degree-preserving double swaps (an inner edge
of each side is traded for two cross edges) or, for equal sides, from
shifted perfect matchings between the sides. The graph is then normalized
to degree 1 and its vertices shuffled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph_core import Graph, GraphError, cut_quality, normalize_regular
from .oracle import brute_set_range
from .rng import make_rng

ORACLE_MAX_N = 24


@dataclass(frozen=True)
class PlantedInstance:
    graph: Graph
    planted: tuple[int, ...]
    rho: float
    degree: int                  # integer degree before normalization
    phi_planted: float           # expansion of the planted side
    inner_expansion: tuple       # min expansion of each induced side (None past the oracle size)
    seed: int

    def sidecar(self) -> dict:
        return {"planted": list(self.planted), "rho": self.rho}

    def to_json(self) -> dict:
        return {**self.graph.to_json(), **self.sidecar()}


def _matching_side(m: int, degree: int, rng) -> np.ndarray:
    """Union of ``degree`` random perfect matchings, avoiding repeated edges when it can."""
    W = np.zeros((m, m), dtype=int)
    for _ in range(200):
        W[:] = 0
        ok = True
        for _ in range(degree):
            p = rng.permutation(m)
            a, b = p[0::2], p[1::2]
            if np.any(W[a, b]):
                ok = False
            W[a, b] += 1
            W[b, a] += 1
        if ok:
            break
    return W


def _circulant_side(m: int, degree: int, rng) -> np.ndarray:
    offsets = rng.choice(np.arange(1, (m - 1) // 2 + 1), size=degree // 2, replace=False)
    W = np.zeros((m, m), dtype=int)
    idx = np.arange(m)
    for s in offsets:
        W[idx, (idx + s) % m] += 1
        W[(idx + s) % m, idx] += 1
    return W


def _side(m: int, degree: int, rng) -> np.ndarray:
    if degree == 0:
        return np.zeros((m, m), dtype=int)
    if degree >= m:
        raise GraphError(f"inner degree {degree} needs more than {m} vertices on a side")
    if m % 2 == 0:
        return _matching_side(m, degree, rng)
    if degree % 2:
        raise GraphError(f"odd side of {m} vertices cannot be {degree}-regular")
    return _circulant_side(m, degree, rng)


def _random_edge(W: np.ndarray, verts: np.ndarray, rng) -> tuple[int, int]:
    sub = np.triu(W[np.ix_(verts, verts)], 1)
    iu, ju = np.nonzero(sub)
    if iu.size == 0:
        raise GraphError("no inner edge left to trade for cross edges")
    k = rng.integers(iu.size)
    return int(verts[iu[k]]), int(verts[ju[k]])


def generate(n: int, rho: float, inner_degree: int, cross_edges, seed: int = 0) -> PlantedInstance:
    """Planted instance with |S| = floor(rho n).

    ``cross_edges`` is a count or "complete". With equal sides and a count
    divisible by |S| it adds that many cross edges as perfect matchings
    (degree grows by cross_edges / |S|); "complete" adds all |S|^2. Otherwise
    cross edges come in pairs from double swaps that keep the inner degree.
    """
    k = int(math.floor(rho * n + 1e-12))
    if not 0 < rho <= 0.5 or k < 2:
        raise GraphError(f"need rho in (0, 1/2] with floor(rho n) >= 2, got rho = {rho}, n = {n}")
    rng = make_rng(seed, 51)
    A, B = np.arange(k), np.arange(k, n)
    W = np.zeros((n, n), dtype=int)
    W[np.ix_(A, A)] = _side(k, inner_degree, rng)
    W[np.ix_(B, B)] = _side(n - k, inner_degree, rng)
    if cross_edges == "complete":
        if n != 2 * k:
            raise GraphError("complete cross edges keep regularity only for equal sides")
        cross_edges = k * k
    cross_edges = int(cross_edges)
    if cross_edges < 0:
        raise GraphError("cross edge count must be nonnegative")
    if cross_edges and n == 2 * k and cross_edges % k == 0:
        t = cross_edges // k
        if t > k:
            raise GraphError(f"at most {k * k} cross edges between sides of {k}")
        sigma = rng.permutation(k)
        for s in rng.choice(k, size=t, replace=False):
            W[A, k + sigma[(A + s) % k]] += 1
            W[k + sigma[(A + s) % k], A] += 1
    elif cross_edges:
        if cross_edges % 2:
            raise GraphError("an odd number of cross edges cannot keep the graph regular")
        for _ in range(cross_edges // 2):
            a, b = _random_edge(W, A, rng)
            c, d = _random_edge(W, B, rng)
            for u, v in ((a, b), (c, d)):
                W[u, v] -= 1
                W[v, u] -= 1
            for u, v in ((a, c), (b, d)):
                W[u, v] += 1
                W[v, u] += 1
    deg = W.sum(axis=1)
    if np.any(deg != deg[0]) or deg[0] == 0:
        raise GraphError(f"construction is not regular: degrees {sorted(set(deg.tolist()))}")
    perm = rng.permutation(n)  # vertex v becomes perm[v]
    P = np.zeros_like(W)
    P[np.ix_(perm, perm)] = W
    g = normalize_regular(Graph(P.astype(float)))
    S = tuple(sorted(int(perm[v]) for v in A))
    rest = tuple(sorted(int(perm[v]) for v in B))
    inner = tuple(_induced_expansion(g, side) for side in (S, rest))
    return PlantedInstance(g, S, float(rho), int(deg[0]), cut_quality(g, S).expansion, inner, int(seed))


def _induced(g: Graph, side) -> Graph:
    side = list(side)
    return Graph(g.weights[np.ix_(side, side)])


def _induced_expansion(g: Graph, side, hi: int | None = None) -> float | None:
    m = len(side)
    if m > ORACLE_MAX_N or m < 2:
        return None
    hi = m // 2 if hi is None else min(hi, m - 1)
    if hi < 1:
        return None
    return brute_set_range(_induced(g, side), 1, hi, measure="expansion").expansion


@dataclass(frozen=True)
class HypothesisReport:
    passed: bool
    delta: float                # const * Phi(S) sqrt(log n log(1/(rho eps))) / eps^1.5
    margin: float               # min over checked T of E(T, side \ T) / (|T| delta)
    witness: tuple | None       # a set attaining the minimum when the check fails
    min_small_expansion: float  # min Phi(T) over |T| <= rho n / 2 in the whole graph
    interesting: bool           # delta < 1, the largest expansion a degree-1 graph can have
    const: float

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "delta": self.delta,
            "margin": self.margin,
            "witness": None if self.witness is None else list(self.witness),
            "min_small_expansion": self.min_small_expansion,
            "interesting": self.interesting,
            "const": self.const,
        }


def hypothesis_delta(inst: PlantedInstance, eps: float, const: float = 1.0) -> float:
    n = inst.graph.n
    return const * inst.phi_planted * math.sqrt(math.log(n) * math.log(1 / (inst.rho * eps))) / eps**1.5


def check_hypothesis(inst: PlantedInstance, eps: float, const: float = 1.0) -> HypothesisReport:
    """Exhaustively check E(T, side \\ T) >= |T| delta for every T inside a side with |T| <= rho n / 2."""
    g = inst.graph
    n = g.n
    if n > ORACLE_MAX_N:
        raise GraphError(f"exhaustive check limited to n <= {ORACLE_MAX_N}")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    delta = hypothesis_delta(inst, eps, const)
    hi = int(math.floor(inst.rho * n / 2 + 1e-12))
    S = set(inst.planted)
    sides = (tuple(sorted(S)), tuple(v for v in range(n) if v not in S))
    worst, witness = math.inf, None
    for side in sides:
        if hi < 1 or len(side) < 2:
            continue
        res = brute_set_range(_induced(g, side), 1, min(hi, len(side) - 1), measure="per_size")
        value = res.cut_weight / res.size
        if value < worst:
            worst, witness = value, tuple(side[i] for i in res.set)
    min_small = brute_set_range(g, 1, max(hi, 1), measure="expansion").expansion
    margin = worst / delta if delta > 0 else math.inf
    passed = bool(worst >= delta - 1e-12)
    return HypothesisReport(passed, delta, margin, None if passed else witness, min_small,
                            bool(delta < 1), float(const))
