"""Column-selection rounding and its eigenvalue-tail certificates.

Given centered vectors X (one column per vertex) with objective phi_SDP, a
column set S with relative residual gamma = ||X_S^perp X||_F^2 / ||X||_F^2
yields a cut of sparsity at most phi_SDP / (1 - gamma). ``threshold_round``
searches cuts from projections onto span(X_S) and checks that bound on every
call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .embed_sdp import LasserreSolution, VectorSolution, conditional_probabilities
from .graph_core import CutResult, Graph, GraphError, better, laplacian, sweep_cut
from .linalg import orthonormal_basis, project_residual, sum_tail_descending
from .rng import make_rng

CONTRACT_TOL = 1e-6
N_RANDOM_DIRECTIONS = 64


class ContractViolation(AssertionError):
    """A proven inequality failed numerically; the message carries the instance."""


@dataclass(frozen=True)
class RoundingReport:
    selected: tuple
    gamma: float
    bound: float
    best_cut: CutResult
    phi_sdp: float
    seed: int

    def to_json(self) -> dict:
        return {
            "selected": list(self.selected),
            "gamma": self.gamma,
            "bound": self.bound,
            "phi_sdp": self.phi_sdp,
            "cut": list(self.best_cut.set),
            "sparsity": self.best_cut.sparsity,
            "seed": self.seed,
        }


def projection_gamma(X: np.ndarray, S) -> float:
    """||X_S^perp X||_F^2 / ||X||_F^2 for X with vertices as columns."""
    X = np.asarray(X, dtype=float)
    total = float(np.sum(X**2))
    if total <= 0:
        raise GraphError("all-zero vector solution")
    R = project_residual(X, S)
    return float(min(max(np.sum(R**2) / total, 0.0), 1.0))


def column_count(r: int, eps: float) -> int:
    return math.ceil(r / eps - 1e-12) + r + 1


def tail_ratio(X: np.ndarray, r: int) -> float:
    """sum_{i>r} sigma_i(X^T X) / ||X||_F^2."""
    X = np.asarray(X, dtype=float)
    return sum_tail_descending(X.T @ X, r) / float(np.sum(X**2))


def greedy_columns(X: np.ndarray, k: int) -> list[int]:
    """Add, k times, the column whose span removes the most residual Frobenius mass."""
    R = np.asarray(X, dtype=float).copy()
    chosen: list[int] = []
    scale = float(np.max(np.sum(R**2, axis=0), initial=0.0))
    for _ in range(k):
        G = R.T @ R
        diag = np.diag(G).copy()
        gain = np.where(diag > 1e-20 * max(scale, 1e-300), np.sum(G**2, axis=0) / np.maximum(diag, 1e-300), -1.0)
        gain[chosen] = -np.inf
        c = int(np.argmax(gain))
        chosen.append(c)
        if diag[c] > 1e-20 * max(scale, 1e-300):
            q = R[:, c] / np.sqrt(diag[c])
            R -= np.outer(q, q @ R)
    return chosen


def column_select(X: np.ndarray, r: int, eps: float) -> list[int]:
    """Greedy column selection of r' = ceil(r/eps) + r + 1 columns.

    Postcondition (asserted): gamma(S) <= tail_r / (1 - eps) + 1e-6, with
    tail_r the relative spectral tail beyond the top r.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    k = column_count(r, eps)
    if k > n:
        raise ValueError(f"r' = {k} columns requested but only {n} available")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    S = greedy_columns(X, k)
    gamma = projection_gamma(X, S)
    limit = tail_ratio(X, r) / (1 - eps) + CONTRACT_TOL
    if gamma > limit:
        S = _swap_improve(X, S)
        gamma = projection_gamma(X, S)
    if gamma > limit:
        raise ContractViolation(f"column selection: gamma {gamma:.3g} > bound {limit:.3g} (r={r}, eps={eps}, cols={S})")
    return sorted(S)


def _swap_improve(X: np.ndarray, S: list[int], rounds: int = 5) -> list[int]:
    S = list(S)
    best = projection_gamma(X, S)
    for _ in range(rounds):
        improved = False
        for pos in range(len(S)):
            for c in range(X.shape[1]):
                if c in S:
                    continue
                T = S[:pos] + [c] + S[pos + 1:]
                gval = projection_gamma(X, T)
                if gval < best - 1e-12:
                    S, best, improved = T, gval, True
        if not improved:
            break
    return S


def _directions(coords: np.ndarray, seed: int) -> np.ndarray:
    """Unit directions in the coordinate space of span(X_S): axes plus seeded random ones."""
    k = coords.shape[1]
    rng = make_rng(seed, 31)
    rand = rng.normal(size=(N_RANDOM_DIRECTIONS, k))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([np.eye(k), rand])


def threshold_round(g: Graph, sol: VectorSolution, S, seed: int = 0,
                    lasserre: LasserreSolution | None = None, check: bool = True) -> tuple[CutResult, float]:
    """Best threshold cut from the projection of the vectors onto span(X_S).

    Candidates: sweeps along the basis axes of span(X_S), 64 seeded random
    unit directions in it, each X_t (t in S), and distance balls around every
    X_t. With a level-r table the conditional probabilities of every
    labeling of S are swept as well. Returns (cut, gamma); raises
    ContractViolation if the cut exceeds phi_SDP / (1 - gamma) + 1e-6.
    """
    S = sorted(set(int(s) for s in S))
    X = sol.X
    if np.ptp(sol.vectors, axis=0).max(initial=0.0) <= 1e-12:
        raise GraphError("degenerate solution: all vectors coincide")
    gamma = projection_gamma(X, S)
    Q = orthonormal_basis(X, S)
    best: CutResult | None = None
    if Q.shape[1]:
        coords = X.T @ Q  # n x k
        for w in _directions(coords, seed):
            best = better(best, sweep_cut(g, coords @ w))
    for t in S:
        xt = sol.vectors[t]
        if xt @ xt > 1e-18:
            best = better(best, sweep_cut(g, sol.vectors @ xt))
        best = better(best, sweep_cut(g, np.sum((sol.vectors - xt) ** 2, axis=1)))
    if lasserre is not None and len(S) <= lasserre.r + 1:
        for f in itertools.product((0, 1), repeat=len(S)):
            a = lasserre.index()[(tuple(S), f)]
            if lasserre.gram[a, a] > 1e-12:
                best = better(best, sweep_cut(g, -conditional_probabilities(lasserre, tuple(S), f)))
    if best is None:
        raise GraphError("no threshold produced a proper cut")
    if check and gamma < 1:
        bound = sol.objective / (1 - gamma)
        if best.sparsity > bound + CONTRACT_TOL:
            raise ContractViolation(
                f"threshold rounding: sparsity {best.sparsity:.9g} > phi_SDP/(1-gamma) = {bound:.9g}; "
                f"S={S}, gamma={gamma:.6g}, phi_SDP={sol.objective:.9g}, mu={sol.mu}, "
                f"weights={g.weights.tolist()}, vectors={sol.vectors.tolist()}"
            )
    return best, gamma


def gs_round(g: Graph, sol: VectorSolution, r: int, eps: float = 0.5, seed: int = 0,
             lasserre: LasserreSolution | None = None) -> RoundingReport:
    """Select r' = min(ceil(r/eps)+r+1, n) columns and threshold-round on their span."""
    n = g.n
    k = column_count(r, eps)
    if k <= n:
        S = column_select(sol.X, r, eps)
    else:
        S = list(range(n))
    cut, gamma = threshold_round(g, sol, S, seed=seed, lasserre=lasserre)
    bound = sol.objective / (1 - gamma) if gamma < 1 else float("inf")
    return RoundingReport(tuple(S), gamma, bound, cut, sol.objective, seed)


# --- eigenvalue-tail certificates ----------------------------------------------


def trace_min_check(Y: np.ndarray, Z: np.ndarray, r: int, tol: float = 1e-7) -> tuple[float, float]:
    """(tail, bound) with tail = sum_{i>r} sigma_i(Y) and bound = tr(YZ)/lambda_{r+1}(Z)."""
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    for M, name in ((Y, "Y"), (Z, "Z")):
        w = np.linalg.eigvalsh((M + M.T) / 2)
        if w[0] < -tol * max(1.0, abs(w[-1])):
            raise ValueError(f"{name} is not PSD (min eigenvalue {w[0]:.3g})")
    lam = np.linalg.eigvalsh((Z + Z.T) / 2)[r]
    if lam <= 1e-12:
        raise ValueError(f"lambda_{r + 1}(Z) = {lam:.3g} is not positive")
    tail = sum_tail_descending(Y, r)
    bound = float(np.trace(Y @ Z)) / lam
    if tail > bound + CONTRACT_TOL:
        raise ContractViolation(f"trace bound: tail {tail:.9g} > {bound:.9g} (r={r})")
    return tail, bound


def tail_bound_via_graph(sol: VectorSolution, g: Graph, r: int) -> float:
    """phi_SDP / lambda_{r+1}(L(G)), asserting it dominates the relative tail."""
    lam = np.linalg.eigvalsh(laplacian(g))[r]
    if lam <= 1e-9:
        raise ValueError(f"lambda_{r + 1}(G) = {lam:.3g}; the graph bound is vacuous")
    value = sol.objective / lam
    tail = tail_ratio(sol.X, r)
    if tail > value + CONTRACT_TOL:
        raise ContractViolation(f"graph tail bound: {tail:.9g} > {value:.9g}")
    return float(value)


def tail_bound_via_flow(sol: VectorSolution, F, g: Graph, r: int) -> float:
    """phi_SDP / lambda_{r+1}(L(F)) for a flow routable in g.

    Also asserts tr(X^T X L(F)) <= tr(X^T X L(G)), which holds because the
    squared distances are a metric and every demand is routed on a path.
    """
    from .sse_flow import FlowError, verify_capacity

    cap = verify_capacity(F, g)
    if not cap.ok:
        raise FlowError(f"flow exceeds capacity on edge {cap.worst_edge} by {cap.worst_excess:.3g}")
    LF = F.laplacian()
    lam = np.linalg.eigvalsh(LF)[r]
    if lam <= 1e-9:
        raise ValueError(f"lambda_{r + 1}(F) = {lam:.3g} is not positive")
    XtX = sol.X.T @ sol.X
    t_flow = float(np.trace(XtX @ LF))
    t_graph = float(np.trace(XtX @ laplacian(g)))
    if t_flow > t_graph + CONTRACT_TOL:
        raise ContractViolation(f"flow energy {t_flow:.9g} exceeds graph energy {t_graph:.9g}")
    value = sol.objective / lam
    tail = tail_ratio(sol.X, r)
    if tail > value + CONTRACT_TOL:
        raise ContractViolation(f"flow tail bound: {tail:.9g} > {value:.9g}")
    return float(value)
