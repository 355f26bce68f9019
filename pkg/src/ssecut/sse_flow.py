"""Small-set expander flows: data model, verifiers, conversions and construction.

A ``MultiFlow`` is a list of weighted paths. Its demand graph puts weight
delta_ij (the total amount on paths between i and j) on every pair, and all
spectral and combinatorial predicates are evaluated on that demand graph.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from . import oracle
from .graph_core import CutResult, Graph, GraphError, cut_quality, laplacian_from_weights
from .lp_solver import FlowNetwork, LpProblem, max_flow, solve_lp

TOL = 1e-9


class FlowError(ValueError):
    pass


@dataclass(frozen=True)
class MultiFlow:
    n: int
    paths: tuple  # of (tuple of vertices, amount)

    def __post_init__(self):
        clean = []
        for k, (verts, amt) in enumerate(self.paths):
            verts = tuple(int(v) for v in verts)
            amt = float(amt)
            if len(verts) < 2:
                raise FlowError(f"path #{k} has fewer than two vertices")
            if verts[0] == verts[-1]:
                raise FlowError(f"path #{k} starts and ends at vertex {verts[0]}")
            if min(verts) < 0 or max(verts) >= self.n:
                raise FlowError(f"path #{k} leaves the vertex range 0..{self.n - 1}")
            if amt < 0 or not np.isfinite(amt):
                raise FlowError(f"path #{k} has invalid amount {amt}")
            clean.append((verts, amt))
        object.__setattr__(self, "paths", tuple(clean))

    @property
    def demands(self) -> np.ndarray:
        D = np.zeros((self.n, self.n))
        for verts, amt in self.paths:
            i, j = verts[0], verts[-1]
            D[i, j] += amt
            D[j, i] += amt
        return D

    @property
    def degrees(self) -> np.ndarray:
        return self.demands.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return laplacian_from_weights(self.demands)

    def edge_loads(self) -> np.ndarray:
        load = np.zeros((self.n, self.n))
        for verts, amt in self.paths:
            for a, b in zip(verts, verts[1:]):
                load[a, b] += amt
                load[b, a] += amt
        return load

    def scaled(self, c: float) -> "MultiFlow":
        return MultiFlow(self.n, tuple((p, a * c) for p, a in self.paths))

    def __add__(self, other: "MultiFlow") -> "MultiFlow":
        if self.n != other.n:
            raise FlowError("flows live on different vertex counts")
        return MultiFlow(self.n, self.paths + other.paths)

    def to_json(self) -> dict:
        return {"paths": [{"verts": list(p), "amount": a} for p, a in self.paths]}

    @classmethod
    def from_json(cls, data: dict, n: int) -> "MultiFlow":
        if not isinstance(data, dict) or not isinstance(data.get("paths"), list):
            raise FlowError('flow JSON must be an object with a "paths" list')
        paths = []
        for k, p in enumerate(data["paths"]):
            try:
                paths.append((tuple(int(v) for v in p["verts"]), float(p["amount"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise FlowError(f"paths[{k}]: expected {{verts, amount}}, got {p!r} ({exc})") from None
        return cls(n, tuple(paths))


def load_flow(path: str | Path, n: int) -> MultiFlow:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FlowError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return MultiFlow.from_json(data, n)


def edge_flow(g: Graph, scale: float = 1.0) -> MultiFlow:
    """The flow whose demands are the edge capacities, each routed on its own edge."""
    return MultiFlow(g.n, tuple(((i, j), scale * w) for i, j, w in g.edges()))


def uniform_flow(n: int, d: float) -> MultiFlow:
    """Demand d/(n-1) on every pair, routed on the direct edge."""
    return MultiFlow(n, tuple(((i, j), d / (n - 1)) for i, j in itertools.combinations(range(n), 2)))


# --- verifiers -----------------------------------------------------------------


@dataclass(frozen=True)
class CapacityCheck:
    ok: bool
    worst_edge: tuple | None
    worst_excess: float


def verify_capacity(F: MultiFlow, g: Graph, tol: float = TOL) -> CapacityCheck:
    load = F.edge_loads()
    off = (load > 0) & (g.weights == 0)
    if off.any():
        a, b = np.argwhere(off)[0]
        raise FlowError(f"flow uses non-edge ({min(a, b)}, {max(a, b)})")
    excess = np.triu(load - g.weights, 1)
    a, b = np.unravel_index(int(np.argmax(excess)), excess.shape)
    worst = float(excess[a, b])
    if worst <= tol:
        return CapacityCheck(True, None, max(worst, 0.0))
    return CapacityCheck(False, (int(a), int(b)), worst)


@dataclass(frozen=True)
class SseVerdict:
    ok: bool
    degree_ok: bool
    min_expansion: float  # min crossing/(d|S|) over the size range
    witness: CutResult | None


def _flow_graph(F: MultiFlow) -> Graph:
    return Graph(F.demands)


def _size_range_check(F: MultiFlow, lo: int, hi: int, d: float, beta: float) -> SseVerdict:
    degree_ok = bool(F.degrees.max(initial=0.0) <= d + TOL)
    dg = _flow_graph(F)
    best = oracle.brute_set_range(dg, lo, hi, measure="per_size")
    exp = best.cut_weight / (d * best.size)
    ok = degree_ok and exp >= beta - TOL
    return SseVerdict(ok, degree_ok, exp, None if exp >= beta - TOL else best)


def verify_sse(F: MultiFlow, r: float, d: float, beta: float) -> SseVerdict:
    """Every set with |S| <= n/r has crossing demand at least beta d |S|; degrees at most d."""
    hi = int(np.floor(F.n / r + 1e-12))
    if hi < 1:
        raise FlowError(f"no set sizes in [1, n/r] for n = {F.n}, r = {r}")
    return _size_range_check(F, 1, hi, d, beta)


def verify_weak_sse(F: MultiFlow, r: float, d: float, beta: float) -> SseVerdict:
    """Same condition restricted to n/3r <= |S| <= n/r."""
    lo = max(1, int(np.ceil(F.n / (3 * r) - 1e-12)))
    hi = int(np.floor(F.n / r + 1e-12))
    if lo > hi:
        raise FlowError(f"size range [{F.n / (3 * r):.3g}, {F.n / r:.3g}] contains no integer")
    return _size_range_check(F, lo, hi, d, beta)


@dataclass(frozen=True)
class SpectralCertificate:
    r: int
    d: float
    lam: float
    lambda_measured: float
    degrees: tuple
    flow: MultiFlow | None = field(default=None, compare=False, repr=False)

    @property
    def degree_ok(self) -> bool:
        deg = np.array(self.degrees)
        return bool(np.all(deg >= self.d / 2 - 1e-7) and np.all(deg <= self.d + 1e-7))

    @property
    def valid(self) -> bool:
        return self.degree_ok and self.lambda_measured >= self.d * self.lam - 1e-7

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "d": self.d,
            "lambda": self.lam,
            "lambda_measured": self.lambda_measured,
            "degrees": list(self.degrees),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SpectralCertificate":
        return cls(int(data["r"]), float(data["d"]), float(data["lambda"]),
                   float(data["lambda_measured"]), tuple(float(x) for x in data["degrees"]))


def verify_spectral(F: MultiFlow, r: int, d: float, lam: float) -> SpectralCertificate:
    """Measure lambda_r of the demand Laplacian (r-th smallest, 1-indexed)."""
    if not 1 <= r <= F.n:
        raise FlowError(f"r must be in 1..{F.n}")
    w = np.linalg.eigvalsh(F.laplacian())
    return SpectralCertificate(int(r), float(d), float(lam), float(w[r - 1]),
                               tuple(float(x) for x in F.degrees), F)


# --- conversions ---------------------------------------------------------------


def _flow_expansion_excluding(D: np.ndarray, removed: np.ndarray, S: np.ndarray, d: float) -> float:
    inside = np.zeros(len(D), dtype=bool)
    inside[S] = True
    other = ~inside & ~removed
    return float(D[np.ix_(inside, other)].sum()) / (d * len(S))


def _worst_small_set(D: np.ndarray, removed: np.ndarray, hi: int, d: float):
    """Min over S within the kept vertices, |S| <= hi, of crossing demand to the kept rest / (d|S|)."""
    keep = np.flatnonzero(~removed)
    if keep.size < 2 or hi < 1:
        return None, np.inf
    sub = Graph(D[np.ix_(keep, keep)])
    hi = min(hi, keep.size - 1)
    res = oracle.brute_set_range(sub, 1, hi, measure="per_size")
    return keep[list(res.set)], res.cut_weight / (d * res.size)


def decompose_st_flow(net: FlowNetwork, flow: np.ndarray) -> list[tuple[list[int], float]]:
    """Split an s-t flow into paths; leftover circulations are dropped."""
    N = net.n_nodes
    f = np.zeros((N, N))
    for (u, v, _), x in zip(net.arcs, flow):
        f[u, v] += x
    net_f = np.maximum(f - f.T, 0.0)  # cancel antiparallel flow
    paths = []
    s, t = net.source, net.sink
    while True:
        # DFS for an s-t path over arcs with positive flow
        prev = {s: None}
        stack = [s]
        while stack and t not in prev:
            u = stack.pop()
            for v in np.flatnonzero(net_f[u] > 1e-12):
                v = int(v)
                if v not in prev:
                    prev[v] = u
                    stack.append(v)
        if t not in prev:
            return paths
        path = [t]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        amt = min(net_f[a, b] for a, b in zip(path, path[1:]))
        for a, b in zip(path, path[1:]):
            net_f[a, b] -= amt
        paths.append((path, float(amt)))


@dataclass(frozen=True)
class WeakToSseResult:
    flow: MultiFlow | None
    small_set: CutResult | None
    removed: tuple


def weak_to_sse(F: MultiFlow, g: Graph, r: float, d: float, beta: float) -> WeakToSseResult:
    """Repair a weak SSE flow into an (r, d, beta/6) SSE flow, or find a small non-expanding set."""
    weak = verify_weak_sse(F, r, d, beta)
    if not weak.ok:
        raise FlowError(f"input is not an (r, d, beta) weak SSE flow (min expansion {weak.min_expansion:.4g})")
    n = F.n
    small = int(np.floor(n / (3 * r) + 1e-12))
    D = F.demands
    removed = np.zeros(n, dtype=bool)
    while True:
        S, val = _worst_small_set(D, removed, small, d)
        if S is None or val >= beta - TOL:
            break
        removed[S] = True
        if removed.sum() > n / (3 * r) + 1e-9:
            raise AssertionError(f"removed set grew to {int(removed.sum())} > n/3r; input cannot be weak SSE")
    U = np.flatnonzero(removed)
    if U.size == 0:
        return WeakToSseResult(F, None, ())
    src, snk = n, n + 1
    net = FlowNetwork(n + 2, src, snk)
    for i, j, w in g.edges():
        net.add_arc(i, j, w)
        net.add_arc(j, i, w)
    for u in range(n):
        if removed[u]:
            net.add_arc(src, u, d * beta)
        else:
            net.add_arc(u, snk, d * beta)
    res = max_flow(net)
    target = d * beta * U.size
    if res.value < target - 1e-9:
        Q = sorted(v for v in res.source_side if v < n)
        return WeakToSseResult(None, cut_quality(g, Q), tuple(int(u) for u in U))
    paths = []
    for path, amt in decompose_st_flow(net, res.flow):
        inner = path[1:-1]
        if len(inner) >= 2 and amt > 0:
            paths.append((tuple(inner), amt))
    F1 = MultiFlow(n, tuple(paths))
    return WeakToSseResult((F + F1).scaled(0.5), None, tuple(int(u) for u in U))


@dataclass(frozen=True)
class CombToSpectral:
    flow: MultiFlow
    capacity_ok: bool


def comb_to_spectral(F: MultiFlow, g: Graph, d: float) -> CombToSpectral:
    """F/2 + d*E/2 where E routes demand c_ij on every edge; degrees land in [d/2, d]."""
    if F.degrees.max(initial=0.0) > d + TOL:
        v = int(np.argmax(F.degrees))
        raise FlowError(f"vertex {v} has flow degree {F.degrees[v]:.6g} > d = {d}")
    if not np.allclose(g.degrees, 1.0, atol=1e-9):
        raise GraphError("comb_to_spectral needs a graph normalized to degree 1")
    F2 = F.scaled(0.5) + edge_flow(g, d / 2)
    deg = F2.degrees
    assert np.all(deg >= d / 2 - 1e-9) and np.all(deg <= d + 1e-9)
    cap = verify_capacity(F2, g)
    if d <= 1 and verify_capacity(F, g).ok:
        assert cap.ok, "F/2 + dE/2 must fit when F fits and d <= 1"
    return CombToSpectral(F2, cap.ok)


def flow_set_expansion(F: MultiFlow, S, d: float) -> float:
    S = sorted(set(int(v) for v in S))
    if not S:
        raise FlowError("empty set")
    D = F.demands
    mask = np.zeros(F.n, dtype=bool)
    mask[S] = True
    return float(D[np.ix_(mask, ~mask)].sum()) / (d * len(S))


def disjoint_expansion_check(F: MultiFlow, sets, d: float = 1.0) -> float:
    """max_i crossing(S_i) / (d |S_i|) over pairwise disjoint nonempty sets."""
    seen: set[int] = set()
    for k, S in enumerate(sets):
        S = set(int(v) for v in S)
        if not S:
            raise FlowError(f"set #{k} is empty")
        if seen & S:
            raise FlowError(f"set #{k} overlaps an earlier set at vertex {min(seen & S)}")
        seen |= S
    return max(flow_set_expansion(F, S, d) for S in sets)


# --- construction --------------------------------------------------------------


def path_basis(g: Graph, k: int = 4) -> list[tuple[int, ...]]:
    """Up to k shortest simple paths (lengths 1/c_e) per vertex pair, hop-limited to 2 * diameter."""
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    for i, j, w in g.edges():
        G.add_edge(i, j, length=1.0 / w)
    if not nx.is_connected(G):
        raise GraphError("graph must be connected to build a path basis")
    hop_limit = 2 * nx.diameter(G) if g.n > 1 else 0
    basis = []
    for i, j in itertools.combinations(range(g.n), 2):
        for p in itertools.islice(nx.shortest_simple_paths(G, i, j, weight="length"), k):
            if len(p) - 1 <= hop_limit:
                basis.append(tuple(p))
    return basis


def _objective(L: np.ndarray, m: int) -> tuple[float, np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(L)
    return float(w[:m].sum()), w, V


def _supergradient(w: np.ndarray, V: np.ndarray, m: int, ends: np.ndarray, cluster_tol: float = 1e-8):
    """d/d delta_ij of the m smallest eigenvalues, averaged over an eigenvalue cluster at the boundary."""
    n = len(w)
    weights = np.zeros(n)
    weights[:m] = 1.0
    if m < n:
        edge = w[m - 1]
        cl = np.flatnonzero(np.abs(w - edge) <= cluster_tol * max(1.0, abs(edge)))
        inside = np.sum(cl < m)
        weights[cl] = inside / cl.size
    diff = V[ends[:, 0]] - V[ends[:, 1]]
    return (diff**2) @ weights


@dataclass
class SpectralFlowResult:
    flow: MultiFlow
    certificate: SpectralCertificate
    objective: float
    history: list
    fallback: CutResult | None = None


def _flow_from(basis, f, n):
    return MultiFlow(n, tuple((p, float(x)) for p, x in zip(basis, f) if x > 1e-13))


def construct_spectral_flow(g: Graph, r: int, d: float, iterations: int = 300, k_paths: int = 4,
                            target_lambda: float | None = None) -> SpectralFlowResult:
    """Frank-Wolfe on max sum_{i<=2r} lambda_i(L(F)) over flows with degrees in [d/2, d].

    The feasible set is the polytope of path amounts on ``path_basis`` with
    degree window and edge capacities. The certificate reports
    (2r, d, lambda_2r / d). If ``target_lambda`` is given and missed, the
    exact small-set oracle is consulted as a fallback (n <= 24).
    """
    n = g.n
    m = min(2 * r, n)
    basis = path_basis(g, k_paths)
    P = len(basis)
    ends = np.array([(p[0], p[-1]) for p in basis])
    deg_A = np.zeros((n, P))
    deg_A[ends[:, 0], np.arange(P)] = 1
    deg_A[ends[:, 1], np.arange(P)] = 1
    edges = g.edges()
    eidx = {(i, j): k for k, (i, j, _) in enumerate(edges)}
    cap_A = np.zeros((len(edges), P))
    for col, p in enumerate(basis):
        for a, b in zip(p, p[1:]):
            cap_A[eidx[(min(a, b), max(a, b))], col] += 1
    caps = np.array([w for _, _, w in edges])
    A = np.vstack([deg_A, deg_A, cap_A])
    senses = ["<="] * n + [">="] * n + ["<="] * len(edges)
    rhs = np.concatenate([np.full(n, d), np.full(n, d / 2), caps])

    def lmo(c):
        res = solve_lp(LpProblem(c, A, senses, rhs))
        if res.status == "infeasible":
            raise FlowError(f"degree window [d/2, d] = [{d / 2}, {d}] is infeasible on this path basis")
        if not res.optimal:
            raise FlowError(f"linear subproblem ended {res.status}")
        return res.x

    def demand_lap(f):
        D = np.zeros((n, n))
        np.add.at(D, (ends[:, 0], ends[:, 1]), f)
        D = D + D.T
        return laplacian_from_weights(D)

    def value(f):
        return _objective(demand_lap(f), m)[0]

    f = lmo(np.zeros(P))  # feasibility (phase 1) point
    # the edge flow d * E is feasible when d <= 1 and g is degree-1
    f_edge = np.zeros(P)
    for col, p in enumerate(basis):
        if len(p) == 2:
            f_edge[col] = d * g.weights[p[0], p[1]]
    if np.all(A[:n] @ f_edge <= d + 1e-9) and np.all(A[n:2 * n] @ f_edge >= d / 2 - 1e-9) \
            and np.all(cap_A @ f_edge <= caps + 1e-9) and value(f_edge) > value(f):
        f = f_edge
    obj = value(f)
    history = [obj]
    invphi = (np.sqrt(5) - 1) / 2
    for t in range(iterations):
        val, w, V = _objective(demand_lap(f), m)
        grad = _supergradient(w, V, m, ends)
        s = lmo(grad)
        dirn = s - f
        if grad @ dirn <= 1e-12:
            break
        # golden-section line search on [0, 1]; concave along the segment
        a, b = 0.0, 1.0
        c1, c2 = b - invphi * (b - a), a + invphi * (b - a)
        v1, v2 = value(f + c1 * dirn), value(f + c2 * dirn)
        for _ in range(40):
            if v1 < v2:
                a, c1, v1 = c1, c2, v2
                c2 = a + invphi * (b - a)
                v2 = value(f + c2 * dirn)
            else:
                b, c2, v2 = c2, c1, v1
                c1 = b - invphi * (b - a)
                v1 = value(f + c1 * dirn)
        cands = [(0.0, val), (1.0 / (t + 2), None), ((a + b) / 2, None), (1.0, None)]
        best_step, best_val = 0.0, val
        for step, v in cands:
            v = value(f + step * dirn) if v is None else v
            if v > best_val + 1e-15:
                best_step, best_val = step, v
        if best_step == 0.0:
            break
        f = np.clip(f + best_step * dirn, 0.0, None)
        obj = value(f)
        history.append(obj)
    F = _flow_from(basis, f, n)
    L = F.laplacian()
    wv = np.linalg.eigvalsh(L)
    lam2r = float(wv[m - 1])
    assert lam2r >= obj / m - 1e-9, "lambda_2r must dominate the average of the bottom 2r eigenvalues"
    cert = verify_spectral(F, m, d, lam2r / d)
    fallback = None
    if target_lambda is not None and lam2r < d * target_lambda - 1e-9:
        fallback = oracle.brute_small_set(g, r)[3]
    return SpectralFlowResult(F, cert, obj, history, fallback)


def min_max_disjoint_expansion(F: MultiFlow, r: int, d: float = 1.0) -> float:
    """min over families of r disjoint nonempty sets of max_i crossing(S_i)/(d|S_i|).

    Exact subset dynamic program in O(r 3^n); n <= 14.
    """
    n = F.n
    if n > 14:
        raise FlowError(f"exhaustive family search is limited to n <= 14, got {n}")
    if not 1 <= r <= n:
        raise FlowError(f"r must be in 1..{n}")
    N = 1 << n
    masks = np.arange(N)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    size = bits.sum(axis=1)
    D = F.demands
    deg = D.sum(axis=1)
    inner = np.einsum("mi,ij,mj->m", bits, D, bits)
    val = np.full(N, np.inf)
    val[1:] = (bits[1:] @ deg - inner[1:]) / (d * size[1:])
    # g1[M] = min over nonempty subsets of M (sum-over-subsets minimum)
    g = val.copy()
    for i in range(n):
        has = (masks >> i) & 1 == 1
        g[has] = np.minimum(g[has], g[masks[has] ^ (1 << i)])
    for _ in range(r - 1):
        nxt = np.full(N, np.inf)
        for M in range(1, N):
            best = np.inf
            A = M
            while A:
                cand = max(val[A], g[M ^ A])
                if cand < best:
                    best = cand
                A = (A - 1) & M
            nxt[M] = best
        g = nxt
    return float(g[N - 1])
