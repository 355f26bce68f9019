"""Dense two-phase simplex and Dinic max-flow.

``solve_lp`` maximizes ``c @ x`` subject to mixed ``<=``/``=``/``>=`` rows and
``x >= 0``. Pivoting falls back to Bland's rule on degenerate stretches, so
it terminates; the tableau is a plain numpy array.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LE, EQ, GE = "<=", "=", ">="
PIVOT_TOL = 1e-9
FLOW_EPS = 1e-10


@dataclass
class LpProblem:
    objective: np.ndarray
    A: np.ndarray
    senses: list[str]
    rhs: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        nvar = self.objective.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nvar)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.senses = list(self.senses)
        if self.A.shape[0] != self.rhs.size or len(self.senses) != self.rhs.size:
            raise ValueError("constraint rows, senses and rhs disagree in length")
        bad = [s for s in self.senses if s not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown relation {bad[0]!r}")
        for arr, name in ((self.objective, "objective"), (self.A, "A"), (self.rhs, "rhs")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")

    @classmethod
    def from_rows(cls, objective, rows: Sequence[tuple]) -> "LpProblem":
        """Build from ``(coefficients, relation, rhs)`` triples."""
        nvar = len(objective)
        if not rows:
            return cls(objective, np.zeros((0, nvar)), [], np.zeros(0))
        A = np.array([r[0] for r in rows], dtype=float)
        return cls(objective, A, [r[1] for r in rows], np.array([r[2] for r in rows], dtype=float))


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float | None = None
    x: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= colv[:, None] * T[row]


def _run(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
    """Maximize with the last row holding reduced costs (negative = improving).

    Entering columns follow Dantzig's rule until a run of degenerate pivots
    is seen, after which Bland's rule takes over for good; Bland alone
    guarantees termination but needs many more pivots on flow LPs.
    """
    m = T.shape[0] - 1
    bland = False
    stall = 0
    for _ in range(max_iter):
        cost = np.where(allowed, T[-1, :-1], 0.0)
        if bland:
            cand = np.flatnonzero(cost < -PIVOT_TOL)
            if cand.size == 0:
                return "optimal"
            col = int(cand[0])
        else:
            col = int(np.argmin(cost))
            if cost[col] >= -PIVOT_TOL:
                return "optimal"
        a = T[:m, col]
        pos = np.flatnonzero(a > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / a[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(ties[np.argmin(basis[ties])])  # lowest leaving basis index
        if best <= 1e-12:
            stall += 1
            if stall >= 50:
                bland = True
        else:
            stall = 0
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError(f"simplex exceeded {max_iter} pivots")


def solve_lp(p: LpProblem, max_iter: int = 200_000) -> LpResult:
    A = p.A.copy()
    b = p.rhs.copy()
    senses = list(p.senses)
    m, nvar = A.shape
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

    n_slack = sum(s in (LE, GE) for s in senses)
    n_art = sum(s in (GE, EQ) for s in senses)
    N = nvar + n_slack + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :nvar] = A
    T[:m, -1] = b
    basis = np.zeros(m, dtype=int)
    s_col = nvar
    a_col = nvar + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == LE:
            T[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if s == GE:
                T[i, s_col] = -1.0
                s_col += 1
            T[i, a_col] = 1.0
            basis[i] = a_col
            art_cols.append(a_col)
            a_col += 1

    allowed = np.ones(N, dtype=bool)
    if art_cols:
        # phase 1: maximize -sum(artificials)
        T[-1, art_cols] = 1.0
        for i in range(m):
            if basis[i] in art_cols:
                T[-1] -= T[i]
        _run(T, basis, allowed, max_iter)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -T[-1, -1] > 1e-8 * scale:
            return LpResult("infeasible")
        art = np.zeros(N, dtype=bool)
        art[art_cols] = True
        # drive remaining artificials out of the basis
        for i in range(m):
            if art[basis[i]]:
                nz = np.flatnonzero((np.abs(T[i, :N]) > PIVOT_TOL) & ~art)
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
        allowed = ~art
        keep = ~art[basis]
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        m = basis.size

    T[-1] = 0.0
    T[-1, :nvar] = -p.objective
    for i in range(m):
        cb = T[-1, basis[i]]
        if cb != 0:
            T[-1] -= cb * T[i]
    status = _run(T, basis, allowed, max_iter)
    if status == "unbounded":
        return LpResult("unbounded")
    x = np.zeros(N)
    x[basis] = T[:m, -1]
    x = np.maximum(x[:nvar], 0.0)
    return LpResult("optimal", float(p.objective @ x), x)


# --- max flow ----------------------------------------------------------------


@dataclass
class FlowNetwork:
    n_nodes: int
    source: int
    sink: int
    arcs: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        for k, (u, v, c) in enumerate(self.arcs):
            self._check_arc(k, u, v, c)

    def _check_arc(self, k, u, v, c):
        if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
            raise ValueError(f"arc #{k} ({u}->{v}) references a node outside 0..{self.n_nodes - 1}")
        if c < 0 or not np.isfinite(c):
            raise ValueError(f"arc #{k} ({u}->{v}) has invalid capacity {c}")

    def add_arc(self, u: int, v: int, cap: float) -> int:
        self._check_arc(len(self.arcs), u, v, cap)
        self.arcs.append((int(u), int(v), float(cap)))
        return len(self.arcs) - 1


@dataclass(frozen=True)
class MaxFlowResult:
    value: float
    flow: np.ndarray  # per arc, same order as FlowNetwork.arcs
    source_side: frozenset[int]

    def cut_capacity(self, net: FlowNetwork) -> float:
        return sum(c for u, v, c in net.arcs if u in self.source_side and v not in self.source_side)


def max_flow(net: FlowNetwork) -> MaxFlowResult:
    """Dinic's algorithm on real capacities; residuals below 1e-10 count as saturated."""
    N = net.n_nodes
    head: list[list[int]] = [[] for _ in range(N)]
    to: list[int] = []
    cap: list[float] = []
    for u, v, c in net.arcs:
        head[u].append(len(to)); to.append(v); cap.append(c)
        head[v].append(len(to)); to.append(u); cap.append(0.0)
    orig = list(cap)
    s, t = net.source, net.sink
    total = 0.0

    def bfs():
        level = [-1] * N
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in head[u]:
                if cap[e] > FLOW_EPS and level[to[e]] < 0:
                    level[to[e]] = level[u] + 1
                    q.append(to[e])
        return level

    while True:
        level = bfs()
        if level[t] < 0:
            break
        ptr = [0] * N
        while True:
            # iterative DFS for one augmenting path in the level graph
            stack = [s]
            edges: list[int] = []
            found = False
            while stack:
                u = stack[-1]
                if u == t:
                    found = True
                    break
                advanced = False
                while ptr[u] < len(head[u]):
                    e = head[u][ptr[u]]
                    v = to[e]
                    if cap[e] > FLOW_EPS and level[v] == level[u] + 1:
                        stack.append(v)
                        edges.append(e)
                        advanced = True
                        break
                    ptr[u] += 1
                if not advanced:
                    stack.pop()
                    if edges:
                        edges.pop()
                    if stack:
                        ptr[stack[-1]] += 1
            if not found:
                break
            push = min(cap[e] for e in edges)
            for e in edges:
                cap[e] -= push
                cap[e ^ 1] += push
            total += push

    level = bfs()
    side = frozenset(i for i in range(N) if level[i] >= 0)
    flow = np.array([orig[2 * k] - cap[2 * k] for k in range(len(net.arcs))])
    flow = np.clip(flow, 0.0, None)
    # the cut capacity is the exact value; summed pushes can drift by rounding
    value = sum(c for u, v, c in net.arcs if u in side and v not in side)
    if abs(value - total) > 1e-9 * max(1.0, value):
        value = total
    return MaxFlowResult(float(value), flow, side)
