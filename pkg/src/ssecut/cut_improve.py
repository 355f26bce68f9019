"""Eigenspace enumeration and max-flow cut improvement driven by a spectral flow.

A set S of expansion Phi has an indicator whose component outside the
bottom eigenspace of a Laplacian is small when the next eigenvalue is large.
Enumerating a net of directions in that eigenspace and thresholding yields
sets T close to S; a single-commodity min cut then moves T to a set Q with
expansion close to Phi(S).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .graph_core import CutResult, Graph, GraphError, better, cut_quality, laplacian
from .lp_solver import FlowNetwork, max_flow

DEFAULT_CAP = 200_000


@dataclass(frozen=True)
class Enumeration:
    candidates: np.ndarray   # (k, n) bool, distinct proper subsets
    directions: int
    dim: int
    gap: float               # eigenvalue just above the enumerated eigenspace
    bound: float | None      # 8 phi / gap when phi is given
    applicable: bool | None  # gap >= 20 phi / eps when both are given


def sphere_net(dim: int, resolution: float) -> np.ndarray:
    """Unit directions from the cube grid of step ``resolution`` in [-1, 1]^dim.

    At most (2/resolution + 1)^dim points; every unit vector lies within
    resolution * sqrt(dim) of one of them.
    """
    if not 0 < resolution <= 1:
        raise ValueError("net resolution must be in (0, 1]")
    k = int(math.floor(1 / resolution + 1e-12))
    ticks = np.arange(-k, k + 1) * resolution
    pts = np.array(list(itertools.product(ticks, repeat=dim)))
    norms = np.linalg.norm(pts, axis=1)
    pts = pts[norms > 1e-12] / norms[norms > 1e-12, None]
    return np.unique(np.round(pts, 12), axis=0)


def eigenspace_enumerate(L, r: int, phi: float | None = None, eps: float | None = None,
                         net_resolution: float = 0.25, cap: int = DEFAULT_CAP) -> Enumeration:
    """Threshold sets of net directions in the span of the bottom r eigenvectors of L.

    The enumerated eigenspace is spanned by the eigenvectors of the r
    smallest eigenvalues; the next eigenvalue must be positive. Raises
    ValueError when more than ``cap`` candidates would be produced.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if not 1 <= r < n:
        raise ValueError(f"r must be in 1..{n - 1}")
    w, U = np.linalg.eigh((L + L.T) / 2)
    gap = float(w[r])
    if gap <= 1e-9 * max(1.0, abs(w[-1])):
        raise ValueError(f"lambda_{r + 1} = {gap:.3g}: eigenspace is degenerate")
    net = sphere_net(r, net_resolution)
    if len(net) * (n - 1) > cap:
        raise ValueError(f"{len(net)} directions x {n - 1} thresholds exceeds the cap of {cap} candidates")
    Y = net @ U[:, :r].T  # one score vector per direction
    seen = set()
    rows = []
    for y in Y:
        order = np.argsort(-y, kind="stable")
        s = y[order]
        for k in np.flatnonzero(np.diff(-s) > 1e-12 * max(1.0, np.abs(s).max())):
            x = np.zeros(n, dtype=bool)
            x[order[: k + 1]] = True
            key = x.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(x)
    cands = np.array(rows, dtype=bool).reshape(-1, n)
    bound = None if phi is None else 8 * phi / gap
    ok = None if phi is None or eps is None else bool(gap >= 20 * phi / eps)
    return Enumeration(cands, len(net), r, gap, bound, ok)


def closest_candidate(cands: np.ndarray, S) -> tuple[int, float]:
    """(index, |x - 1_S| / |1_S|) of the candidate nearest to the indicator of S."""
    s = np.zeros(cands.shape[1], dtype=bool)
    s[list(S)] = True
    diff = np.sum(cands != s, axis=1)
    i = int(np.argmin(diff))
    return i, float(diff[i]) / s.sum()


def improve_cut(g: Graph, T, phi_guess: float, delta: float) -> CutResult:
    """Sink side Q of the min s-t cut with per-vertex terminal arcs of capacity 4 phi / delta.

    Vertices of T connect to the sink and the rest to the source. Q
    minimizes cut(Q) + (4 phi / delta) |Q xor T|. When the min cut is
    trivial (Q empty or all of V) the cut of T is returned.
    """
    n = g.n
    T = sorted(set(int(v) for v in T))
    if not 0 < len(T) < n:
        raise GraphError(f"T must be a proper nonempty subset, got {len(T)} of {n} vertices")
    if not phi_guess > 0 or not 0 < delta < 1:
        raise ValueError("need phi_guess > 0 and delta in (0, 1)")
    s, t = n, n + 1
    net = FlowNetwork(n + 2, s, t)
    for i, j, w in g.edges():
        net.add_arc(i, j, w)
        net.add_arc(j, i, w)
    c = 4 * phi_guess / delta
    inT = np.zeros(n, dtype=bool)
    inT[T] = True
    for v in range(n):
        if inT[v]:
            net.add_arc(v, t, c)
        else:
            net.add_arc(s, v, c)
    res = max_flow(net)
    Q = [v for v in range(n) if v not in res.source_side]
    if not 0 < len(Q) < n:
        return cut_quality(g, T)
    return cut_quality(g, Q)


def _objective(cut: CutResult, mode: str) -> float:
    return cut.sparsity if mode == "sparsest" else cut.expansion


def flow_round(g: Graph, cert, eps: float, mode: str = "sparsest", c: float | None = None,
               net_resolution: float = 0.25, cap: int = DEFAULT_CAP) -> CutResult:
    """Best improved cut over eigenspace candidates of the certified flow.

    The certificate (m, d, lambda) bounds lambda_m(L(F)) below, so the span
    of the bottom m - 1 eigenvectors of L(F) is enumerated. Each candidate
    is improved for phi guesses on the grid (1 + eps)^k between
    lambda_2(L(G)) / 2 and 1, with delta = eps (sparsest), 1/2
    (expansion) or c/2 (balanced, keeping only sets with at least cn/2
    vertices on each side).
    """
    if cert is None or getattr(cert, "flow", None) is None or not cert.valid:
        raise ValueError("flow_round needs a valid spectral certificate carrying its flow")
    if mode not in ("sparsest", "expansion", "balanced"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "balanced" and not (c is not None and 0 < c <= 1):
        raise ValueError("balanced mode needs c in (0, 1]")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    n = g.n
    delta = {"sparsest": eps, "expansion": 0.5, "balanced": (c or 0) / 2}[mode]
    min_side = math.ceil(c * n / 2 - 1e-12) if mode == "balanced" else 1
    LF = cert.flow.laplacian()
    dim = max(1, min(cert.r - 1, n - 2))
    enum = eigenspace_enumerate(LF, dim, net_resolution=net_resolution, cap=cap)
    lam2 = float(np.linalg.eigvalsh(laplacian(g))[1])
    lo = max(lam2 / 2, 1e-4)
    guesses = [lo * (1 + eps) ** k for k in range(int(math.ceil(math.log(1 / lo) / math.log(1 + eps))) + 1)]
    measure = "sparsity" if mode == "sparsest" else "expansion"
    best = None

    def consider(cut):
        nonlocal best
        if min(cut.size, n - cut.size) >= min_side:
            best = better(best, cut, measure)

    tried = set()
    for x in enum.candidates:
        T = tuple(np.flatnonzero(x).tolist())
        if len(T) > n / 2:
            T = tuple(np.flatnonzero(~x).tolist())
        if T in tried:
            continue
        tried.add(T)
        consider(cut_quality(g, T))
        for phi in guesses:
            consider(improve_cut(g, T, phi, delta))
    if best is None:
        raise GraphError(f"no candidate met the size requirement of {min_side} vertices per side")
    if best.size > n / 2:
        best = cut_quality(g, [v for v in range(n) if v not in best.set])
    return best
