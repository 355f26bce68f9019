"""Weighted undirected graphs, cut measures and Laplacians.

Graphs are dense: a symmetric ``n x n`` weight matrix with zero diagonal.
At desk scale (n up to a few hundred) this keeps every quantity trivially
checkable against brute force.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9


class GraphError(ValueError):
    """Malformed graph input or an operation precondition violated."""


@dataclass(frozen=True)
class Graph:
    weights: np.ndarray
    regular_input: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise GraphError(f"negative weight {w[i, j]} on ({i}, {j})")
        if np.any(np.diag(w) != 0):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise GraphError(f"self-loop on vertex {i}")
        if not np.allclose(w, w.T, atol=1e-12, rtol=0):
            raise GraphError("weight matrix is not symmetric")
        w = (w + w.T) / 2
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def adjacency(self) -> np.ndarray:
        return self.weights

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.weights, 1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def is_regular(self, tol: float = TOL) -> bool:
        d = self.degrees
        return bool(np.ptp(d) <= tol) if self.n else True

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges()]}

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.n, self.weights.tobytes()))


@dataclass(frozen=True)
class CutResult:
    """A vertex set together with its cut measures in some graph."""

    set: tuple[int, ...]
    cut_weight: float
    sparsity: float
    expansion: float
    n: int = field(repr=False, default=0)

    @property
    def size(self) -> int:
        return len(self.set)

    def to_json(self) -> dict:
        return {
            "set": list(self.set),
            "cut_weight": self.cut_weight,
            "sparsity": self.sparsity,
            "expansion": self.expansion,
        }


def from_edges(n: int, edges: Iterable[Sequence]) -> Graph:
    """Build a graph from ``(u, v, w)`` triples; duplicate pairs are rejected."""
    w = np.zeros((n, n))
    for pos, e in enumerate(edges):
        if len(e) == 2:
            u, v = e
            c = 1.0
        elif len(e) == 3:
            u, v, c = e
        else:
            raise GraphError(f"edges[{pos}]: expected [u, v, w], got {list(e)!r}")
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edges[{pos}]: vertex index out of range 0..{n - 1}: {u}, {v}")
        if u == v:
            raise GraphError(f"edges[{pos}]: self-loop on vertex {u}")
        if w[u, v] != 0:
            raise GraphError(f"edges[{pos}]: duplicate edge ({min(u, v)}, {max(u, v)})")
        c = float(c)
        if c < 0 or not np.isfinite(c):
            raise GraphError(f"edges[{pos}]: invalid weight {c}")
        if c == 0:
            continue
        w[u, v] = w[v, u] = c
    return Graph(w)


def load_graph(path: str | Path) -> Graph:
    """Read Graph JSON ``{"n": int, "edges": [[u, v, w], ...]}`` with ``u < v``."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return graph_from_json(data, source=str(path))


def graph_from_json(data: dict, source: str = "<graph>") -> Graph:
    if not isinstance(data, dict) or "n" not in data or "edges" not in data:
        raise GraphError(f"{source}: expected object with keys 'n' and 'edges'")
    n = data["n"]
    if not isinstance(n, int) or n < 1:
        raise GraphError(f"{source}: 'n' must be a positive integer, got {n!r}")
    for pos, e in enumerate(data["edges"]):
        if not isinstance(e, (list, tuple)) or len(e) != 3:
            raise GraphError(f"{source}: edges[{pos}]: expected [u, v, w], got {e!r}")
        if not (isinstance(e[0], int) and isinstance(e[1], int)):
            raise GraphError(f"{source}: edges[{pos}]: vertex indices must be integers")
        if e[0] >= e[1] and e[0] != e[1]:
            raise GraphError(f"{source}: edges[{pos}]: expected u < v, got {e[0]}, {e[1]}")
    try:
        return from_edges(n, data["edges"])
    except GraphError as exc:
        raise GraphError(f"{source}: {exc}") from None


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_json()))


def normalize_regular(g: Graph) -> Graph:
    """Rescale weights towards degree 1.

    Each weight becomes ``(w_ij/d_i + w_ij/d_j)/2``. On a regular input this
    is the uniform scaling by ``1/d`` and the result has all degrees exactly 1;
    irregular inputs come back symmetrized but generally irregular, and
    ``regular_input`` is False.
    """
    d = g.degrees
    if np.any(d <= 0):
        v = int(np.flatnonzero(d <= 0)[0])
        raise GraphError(f"vertex {v} is isolated (degree 0); cannot normalize")
    regular = g.is_regular()
    if regular:
        w = g.weights / d[0]
    else:
        w = (g.weights / d[:, None] + g.weights / d[None, :]) / 2
    return Graph(w, regular_input=regular)


def _as_mask(n: int, S: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter((int(v) for v in S), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise GraphError(f"vertex set has indices outside 0..{n - 1}")
    mask[idx] = True
    return mask


def cut_weight(g: Graph, S: Iterable[int]) -> float:
    """E(S, V \\ S): total weight of edges with exactly one endpoint in S."""
    mask = _as_mask(g.n, S)
    return float(g.weights[np.ix_(mask, ~mask)].sum())


def cut_quality(g: Graph, S: Iterable[int]) -> CutResult:
    S = tuple(sorted({int(v) for v in S}))
    n = g.n
    k = len(S)
    if k == 0 or k == n:
        raise GraphError(f"cut needs 0 < |S| < n, got |S| = {k}, n = {n}")
    c = cut_weight(g, S)
    return CutResult(
        set=S,
        cut_weight=c,
        sparsity=n * c / (k * (n - k)),
        expansion=c / min(k, n - k),
        n=n,
    )


def laplacian(g: Graph) -> np.ndarray:
    return np.diag(g.degrees) - g.weights


def normalized_laplacian(g: Graph) -> np.ndarray:
    d = g.degrees
    if np.any(d <= 0):
        v = int(np.flatnonzero(d <= 0)[0])
        raise GraphError(f"vertex {v} has zero degree; normalized Laplacian undefined")
    s = 1 / np.sqrt(d)
    return s[:, None] * laplacian(g) * s[None, :]


def laplacian_from_weights(w: np.ndarray) -> np.ndarray:
    """Laplacian of an arbitrary symmetric weight matrix (e.g. a demand matrix)."""
    w = np.asarray(w, dtype=float)
    return np.diag(w.sum(axis=1)) - w


# --- standard families -----------------------------------------------------


def complete_graph(n: int, weight: float = 1.0) -> Graph:
    w = np.full((n, n), float(weight))
    np.fill_diagonal(w, 0)
    return Graph(w)


def cycle_graph(n: int, weight: float = 1.0) -> Graph:
    return from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)] if n > 2 else [(0, 1, weight)])


def path_graph(n: int, weight: float = 1.0) -> Graph:
    return from_edges(n, [(i, i + 1, weight) for i in range(n - 1)])


def grid_graph(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if r + 1 < rows:
                edges.append((v, v + cols, 1.0))
    return from_edges(rows * cols, edges)


def disjoint_union(*graphs: Graph) -> Graph:
    n = sum(h.n for h in graphs)
    w = np.zeros((n, n))
    off = 0
    for h in graphs:
        w[off:off + h.n, off:off + h.n] = h.weights
        off += h.n
    return Graph(w)


def barbell_graph(k: int, bridge: float = 1.0, path_len: int = 0) -> Graph:
    """Two unit-weight K_k joined by a bridge (optionally through a path)."""
    w = disjoint_union(complete_graph(k), complete_graph(k)).weights.copy()
    n = 2 * k + path_len
    full = np.zeros((n, n))
    full[: 2 * k, : 2 * k] = w
    chain = [k - 1] + list(range(2 * k, 2 * k + path_len)) + [k]
    for a, b in zip(chain, chain[1:]):
        full[a, b] = full[b, a] = bridge
    return Graph(full)


def random_graph(n: int, p: float, rng: np.random.Generator, weighted: bool = False) -> Graph:
    """Erdos-Renyi graph, resampled until it has no isolated vertex."""
    for _ in range(1000):
        upper = np.triu(rng.random((n, n)) < p, 1)
        w = upper.astype(float)
        if weighted:
            w *= rng.uniform(0.5, 2.0, size=(n, n))
        w = w + w.T
        if np.all(w.sum(axis=1) > 0):
            return Graph(w)
    raise GraphError(f"could not draw G({n}, {p}) without isolated vertices")


def sweep_cut(g: Graph, scores: np.ndarray, measure: str = "sparsity",
              min_size: int = 1) -> CutResult | None:
    """Best prefix cut of the vertices sorted by ``scores``.

    Only prefixes ending at a strict gap in the sorted scores are thresholds;
    sizes k with min_size <= min(k, n-k) are considered. The cut weight of
    every prefix comes from one cumulative sum, so a sweep costs O(n^2).
    """
    n = g.n
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    gap = np.diff(s) > 1e-12 * max(1.0, float(np.abs(s).max(initial=0.0)))
    W = g.weights[np.ix_(order, order)]
    d = W.sum(axis=1)
    inner = np.cumsum(np.tril(W, -1).sum(axis=1))
    cut = np.cumsum(d) - 2 * inner  # cut[k-1] is the cut of the first k vertices
    k = np.arange(1, n)
    c = cut[:-1]
    if measure == "sparsity":
        val = n * c / (k * (n - k))
    else:
        val = c / np.minimum(k, n - k)
    ok = (np.minimum(k, n - k) >= min_size) & gap
    if not ok.any():
        return None
    val = np.where(ok, val, np.inf)
    best = int(np.argmin(val))
    S = order[: best + 1]
    if len(S) > n / 2:
        S = order[best + 1:]
    return cut_quality(g, S)


def better(a: CutResult | None, b: CutResult | None, measure: str = "sparsity") -> CutResult | None:
    """The preferable of two cuts: lower measure, then smaller, then lexicographic."""
    if a is None:
        return b
    if b is None:
        return a
    ka = (round(getattr(a, measure), 12), a.size, a.set)
    kb = (round(getattr(b, measure), 12), b.size, b.set)
    return a if ka <= kb else b
