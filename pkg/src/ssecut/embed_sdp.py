"""Vector solutions of the sparsest cut relaxation.

``solve_base_embedding`` solves the base-level relaxation for one balance
parameter mu:

    min  1/(n mu (1-mu)) * sum_{u<v} C_uv ||x_u - x_v||^2
    s.t. ||x_0||^2 = 1,  <x_u, x_0> = ||x_u||^2,  sum_u x_u = n mu x_0,
         <x_u, x_v> >= 0,  squared distances form a metric,

over the Gram matrix of (x_0, x_1, ..., x_n). ``solve_sdp`` sweeps mu over
{1/n, ..., floor(n/2)/n}. Level-r hierarchy tables are only validated
(``validate_lasserre``), never solved for.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .graph_core import Graph, GraphError

FEAS_TOL = 1e-6
# tried in order until a solution passes the residual check
SOLVER_ATTEMPTS = (
    {},
    {"static_regularization_constant": 1e-7, "max_iter": 500},
    {"static_regularization_constant": 1e-6, "max_iter": 1000},
)


class SolverError(RuntimeError):
    """The SDP solver failed to reach a solution within tolerance."""


@dataclass(frozen=True)
class VectorSolution:
    """One centered vector per vertex (rows of ``vectors``)."""

    vectors: np.ndarray
    objective: float
    mu: float
    nu: float
    residuals: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def X(self) -> np.ndarray:
        """Vectors as columns, the ``[X_u]_u`` matrix of the rounding analysis."""
        return self.vectors.T

    @property
    def sq_norms(self) -> np.ndarray:
        return np.sum(self.vectors**2, axis=1)

    def sq_dists(self) -> np.ndarray:
        return squared_distances(self.vectors)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "nu": self.nu,
            "objective": self.objective,
            "vectors": self.vectors.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "VectorSolution":
        return cls(np.array(data["vectors"], dtype=float), float(data["objective"]),
                   float(data["mu"]), float(data["nu"]))


def squared_distances(V: np.ndarray) -> np.ndarray:
    sq = np.sum(V**2, axis=1)
    D = sq[:, None] + sq[None, :] - 2 * V @ V.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def triangle_violation(D: np.ndarray) -> float:
    """max over (u, w, v) of D_uv - D_uw - D_wv, or 0 when all hold."""
    n = D.shape[0]
    worst = 0.0
    for w in range(n):
        worst = max(worst, float((D - D[:, w:w + 1] - D[w:w + 1, :]).max()))
    return worst


def mean_shift(vectors: np.ndarray) -> np.ndarray:
    """Translate so the vectors sum to zero."""
    V = np.asarray(vectors, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("need a nonempty 2-d array of row vectors")
    return V - V.mean(axis=0)


def from_vectors(g: Graph, vectors: np.ndarray, mu: float | None = None) -> VectorSolution:
    """Center ``vectors`` and score them against ``g``."""
    V = mean_shift(vectors)
    D = squared_distances(V)
    nu = float(np.sum(V**2))
    if nu <= 0:
        raise GraphError("all vectors coincide; the embedding is degenerate")
    obj = float(np.sum(np.triu(g.weights * D, 1))) / nu
    if mu is None:
        mu = float("nan")
    res = {
        "centering": float(np.abs(V.sum(axis=0)).max()),
        "triangle": triangle_violation(D),
        "norm": float(max(0.0, np.sum(V**2, axis=1).max() - 1)),
    }
    return VectorSolution(V, obj, float(mu), nu, res)


def _factor(G: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Rows V with V V^T ~ G, negative eigenvalues clipped and tiny ones dropped."""
    w, U = np.linalg.eigh((G + G.T) / 2)
    keep = w > rel_tol * max(1.0, w.max(initial=0.0))
    return U[:, keep] * np.sqrt(w[keep])


@lru_cache(maxsize=16)
def _problem(n: int):
    import cvxpy as cp

    Y = cp.Variable((n + 1, n + 1), PSD=True)
    W = cp.Parameter((n, n), nonneg=True)
    total = cp.Parameter()
    total_sq = cp.Parameter()
    G = Y[1:, 1:]
    d = cp.diag(G)
    one = np.ones((n, 1))
    dcol = cp.reshape(d, (n, 1), order="F")
    D = dcol @ one.T + one @ dcol.T - 2 * G
    cons = [
        Y[0, 0] == 1,
        d == Y[0, 1:],
        cp.sum(Y[0, 1:]) == total,
        cp.sum(G) == total_sq,
        G >= 0,
        G <= one @ dcol.T,  # <x_u, x_v> <= ||x_v||^2
        G >= dcol @ one.T + one @ dcol.T - 1,  # ||x_u - x_v||^2 <= 2 - ||x_u||^2 - ||x_v||^2
    ]
    for k in range(n):
        cons.append(D[:, k:k + 1] @ one.T + one @ D[k:k + 1, :] - D >= 0)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.multiply(W, D)) / 2), cons)
    return prob, Y, W, total, total_sq


def solve_base_embedding(g: Graph, mu: float) -> VectorSolution:
    """Solve the base relaxation at balance ``mu`` (a multiple of 1/n, at most 1/2)."""
    n = g.n
    k = mu * n
    if n < 2 or abs(k - round(k)) > 1e-9 or not 1 <= round(k) <= n // 2:
        raise ValueError(f"mu must be in {{1/n, ..., floor(n/2)/n}}, got {mu} for n = {n}")
    mu = round(k) / n
    prob, Y, W, total, total_sq = _problem(n)
    W.value = g.weights / (n * mu * (1 - mu))
    total.value = n * mu
    total_sq.value = (n * mu) ** 2
    failures = []
    for opts in SOLVER_ATTEMPTS:
        try:
            with warnings.catch_warnings():
                # inaccurate solves are judged by the residual check below
                warnings.simplefilter("ignore", UserWarning)
                # a fresh solver per call keeps results independent of earlier solves
                prob.solve(solver="CLARABEL", warm_start=False, **opts)
        except Exception as exc:  # solver-level crash
            failures.append(f"{opts or 'defaults'}: {exc}")
            continue
        if prob.status not in ("optimal", "optimal_inaccurate") or Y.value is None:
            failures.append(f"{opts or 'defaults'}: status {prob.status!r}")
            continue
        sol = from_vectors(g, _factor(Y.value)[1:], mu)
        bad = {k: v for k, v in sol.residuals.items() if v > FEAS_TOL}
        if not bad:
            return sol
        failures.append(f"{opts or 'defaults'}: {prob.status} with residuals {bad}")
    raise SolverError(f"SDP solver failed at mu = {mu}: " + "; ".join(failures))


def solve_sdp(g: Graph, mus=None) -> VectorSolution:
    """Minimum over the balance sweep; ties go to the smaller mu."""
    n = g.n
    mus = [k / n for k in range(1, n // 2 + 1)] if mus is None else mus
    best = None
    for mu in mus:
        sol = solve_base_embedding(g, mu)
        if best is None or sol.objective < best.objective - 1e-12:
            best = sol
    return best


def translate_to_origin(sol: VectorSolution) -> tuple[VectorSolution, int]:
    """Shift so that some vertex t sits at the origin, with total squared norm at most doubled.

    The smallest index achieving the bound is used. Returns the shifted
    solution (objective unchanged, ``nu`` recomputed) and t.
    """
    V = sol.vectors
    base = float(np.sum(V**2))
    totals = np.array([np.sum((V - V[t]) ** 2) for t in range(sol.n)])
    ok = np.flatnonzero(totals <= 2 * base + 1e-12 * max(1.0, base))
    # sum_t sum_u ||X_u - X_t||^2 = 2 n sum ||X_u||^2 for centered X, so some t qualifies
    t = int(ok[0]) if ok.size else int(np.argmin(totals))
    W = V - V[t]
    return VectorSolution(W, sol.objective, sol.mu, float(np.sum(W**2)), dict(sol.residuals)), t


# --- level-r tables ------------------------------------------------------------

Key = tuple[tuple[int, ...], tuple[int, ...]]


def lasserre_keys(n: int, r: int) -> list[Key]:
    """Canonical key order: sets by size then lexicographic, labelings binary-ascending."""
    keys: list[Key] = []
    for size in range(0, min(r + 1, n) + 1):
        for S in itertools.combinations(range(n), size):
            for f in itertools.product((0, 1), repeat=size):
                keys.append((S, f))
    return keys


@dataclass(frozen=True)
class LasserreSolution:
    n: int
    r: int
    keys: list
    gram: np.ndarray

    def index(self) -> dict:
        return {k: i for i, k in enumerate(self.keys)}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "entries": [{"sets": [list(S), list(f)]} for S, f in self.keys],
            "gram": self.gram.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "LasserreSolution":
        keys = [(tuple(e["sets"][0]), tuple(e["sets"][1])) for e in data["entries"]]
        n = data.get("n")
        if n is None:
            n = 1 + max((max(S) for S, _ in keys if S), default=-1)
        return cls(int(n), int(data["r"]), keys, np.array(data["gram"], dtype=float))


def load_lasserre(path: str | Path) -> LasserreSolution:
    return LasserreSolution.from_json(json.loads(Path(path).read_text()))


def integral_lasserre(n: int, r: int, cuts, probs=None) -> LasserreSolution:
    """Table for a distribution over cuts; each cut is a set of vertices labeled 1."""
    cuts = [set(c) for c in cuts]
    probs = np.full(len(cuts), 1 / len(cuts)) if probs is None else np.asarray(probs, dtype=float)
    keys = lasserre_keys(n, r)
    # consistency matrix: key agrees with cut i
    M = np.array([[all((v in c) == bool(b) for v, b in zip(S, f)) for c in cuts] for S, f in keys], dtype=float)
    gram = (M * probs) @ M.T
    return LasserreSolution(n, r, keys, gram)


@dataclass
class LasserreReport:
    conditions: dict  # name -> (passed, worst violation)
    vectors: VectorSolution | None = None

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.conditions.values())

    def to_json(self) -> dict:
        out = {k: {"pass": ok, "worst": w} for k, (ok, w) in sorted(self.conditions.items())}
        return {"passed": self.passed, "conditions": out}


def validate_lasserre(sol: LasserreSolution, g: Graph | None = None, tol: float = 1e-7) -> LasserreReport:
    """Check the level-r conditions on an inner-product table.

    Conditions: completeness, unit empty vector, orthogonality on label
    conflicts, union consistency, per-vertex label sums, marginalization, PSD.
    On success the singleton vectors x_u = x_u(1) are extracted and centered.
    """
    idx = sol.index()
    missing = [k for k in lasserre_keys(sol.n, sol.r) if k not in idx]
    if missing:
        S, f = missing[0]
        raise ValueError(f"table is missing {len(missing)} entries, first: set {list(S)} labels {list(f)}")
    G = sol.gram
    if G.shape != (len(sol.keys), len(sol.keys)):
        raise ValueError(f"gram has shape {G.shape}, expected {(len(sol.keys),) * 2}")
    cond = {}
    e0 = idx[((), ())]
    cond["unit_empty"] = abs(G[e0, e0] - 1)

    conflict = 0.0
    groups: dict = {}
    keys = sol.keys
    for i, (S, f) in enumerate(keys):
        fs = dict(zip(S, f))
        for j in range(i, len(keys)):
            T, h = keys[j]
            merged = dict(fs)
            clash = False
            for v, b in zip(T, h):
                if merged.setdefault(v, b) != b:
                    clash = True
                    break
            if clash:
                conflict = max(conflict, abs(G[i, j]))
                continue
            U = tuple(sorted(merged))
            groups.setdefault((U, tuple(merged[v] for v in U)), []).append(G[i, j])
    cond["orthogonality"] = conflict
    spread = 0.0
    for (U, lab), vals in groups.items():
        ref = G[idx[(U, lab)], idx[(U, lab)]] if (U, lab) in idx else np.mean(vals)
        spread = max(spread, float(np.max(np.abs(np.array(vals) - ref))))
    cond["consistency"] = spread
    cond["vertex_sum"] = max(
        (abs(G[idx[((u,), (0,))], idx[((u,), (0,))]] + G[idx[((u,), (1,))], idx[((u,), (1,))]] - G[e0, e0])
         for u in range(sol.n)),
        default=0.0,
    )
    # marginalization: || x_S(f.0) + x_S(f.1) - x_{S-u}(f) ||^2 == 0
    marg = 0.0
    for S, f in keys:
        if not S:
            continue
        for pos in range(len(S)):
            if f[pos] != 0:
                continue
            a = idx[(S, f)]
            b = idx[(S, f[:pos] + (1,) + f[pos + 1:])]
            c = idx[(S[:pos] + S[pos + 1:], f[:pos] + f[pos + 1:])]
            v = np.zeros(len(keys))
            v[[a, b]] += 1
            v[c] -= 1
            marg = max(marg, float(abs(v @ G @ v)))
    cond["marginalization"] = marg
    w = np.linalg.eigvalsh((G + G.T) / 2)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    cond["psd"] = max(0.0, -float(w[0]) / scale)
    conditions = {k: (bool(v <= tol), float(v)) for k, v in cond.items()}
    report = LasserreReport(conditions)
    if report.passed:
        F = _factor(G)
        x = np.array([F[idx[((u,), (1,))]] for u in range(sol.n)])
        mu = float(np.mean(np.sum(x * F[e0], axis=1)))
        if g is not None:
            try:
                report.vectors = from_vectors(g, x, mu)
            except GraphError:
                report.vectors = None
        else:
            V = mean_shift(x)
            report.vectors = VectorSolution(V, float("nan"), mu, float(np.sum(V**2)))
    return report


def conditional_probabilities(sol: LasserreSolution, S: tuple[int, ...], f: tuple[int, ...]) -> np.ndarray:
    """<x_S(f), x_u> / ||x_S(f)||^2 for every vertex u (requires |S| + 1 <= r + 1 only via consistency)."""
    idx = sol.index()
    a = idx[(tuple(S), tuple(f))]
    p = sol.gram[a, a]
    if p <= 0:
        raise ValueError(f"labeling {f} of {S} has zero probability")
    return np.array([sol.gram[a, idx[((u,), (1,))]] for u in range(sol.n)]) / p
