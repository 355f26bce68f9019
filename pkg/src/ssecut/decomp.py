"""Padded decompositions, padded-decomposition rounding and a region-growing oracle.

A padded decomposition at scale Delta is a random partition into blocks of
diameter at most Delta such that each point's ball of radius Delta/beta
stays inside its block with probability at least 1/8. The construction here
is random-order ball carving with a common radius drawn from
[Delta/4, Delta/2], whose padding parameter is ``padding_beta(n)``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .embed_sdp import VectorSolution, solve_sdp
from .graph_core import CutResult, Graph, GraphError, better, cut_quality
from .gs_round import threshold_round
from .rng import make_rng

METRIC_TOL = 1e-7
PAD_PROB = 1 / 8


# --- padded decompositions --------------------------------------------------------


@dataclass(frozen=True)
class PaddedPartition:
    blocks: tuple[tuple[int, ...], ...]
    labels: np.ndarray = field(repr=False, compare=False)
    scale: float
    beta: float
    seed: int

    def diameters(self, dist: np.ndarray) -> np.ndarray:
        return np.array([dist[np.ix_(b, b)].max() for b in self.blocks])

    def pad_radius(self, dist: np.ndarray) -> np.ndarray:
        """Per vertex, the distance to the nearest vertex outside its block (inf if none).

        The closed ball B(u, t) lies in the block of u exactly when t is
        smaller than this value.
        """
        other = self.labels[:, None] != self.labels[None, :]
        return np.where(other, dist, np.inf).min(axis=1)

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "scale": self.scale,
                "beta": self.beta, "seed": self.seed}


def padding_beta(n: int) -> float:
    """Padding parameter of the ball-carving construction on n points.

    A ball of radius t around u is cut with probability at most
    (8t/Delta) H_n, which is at most 7/8 for t <= Delta / beta.
    """
    return 64 * sum(1 / k for k in range(1, max(n, 1) + 1)) / 7


def metric_violation(dist: np.ndarray) -> float:
    """max over (u, w, v) of d(u, v) - d(u, w) - d(w, v); infinite distances allowed."""
    D = np.asarray(dist, dtype=float)
    worst = 0.0
    for w in range(D.shape[0]):
        via = D[:, w:w + 1] + D[w:w + 1, :]
        with np.errstate(invalid="ignore"):
            diff = np.where(np.isfinite(via), D - via, -np.inf)
        worst = max(worst, float(diff.max(initial=0.0)))
    return worst


def check_metric(dist, tol: float = METRIC_TOL) -> tuple[np.ndarray, float]:
    D = np.asarray(dist, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
        raise GraphError(f"distance matrix must be square and nonempty, got shape {D.shape}")
    if np.any(np.isnan(D)) or np.any(D < 0):
        raise GraphError("distances must be nonnegative numbers")
    if np.any(np.diag(D) != 0):
        raise GraphError("distance matrix must have a zero diagonal")
    if not np.array_equal(D, D.T):
        if not np.allclose(D, D.T, atol=tol, rtol=0, equal_nan=False):
            raise GraphError("distance matrix is not symmetric")
        D = np.minimum(D, D.T)
    viol = metric_violation(D)
    scale = max(1.0, float(np.max(D, where=np.isfinite(D), initial=0.0)))
    if viol > tol * scale:
        raise GraphError(f"not a metric: triangle inequality violated by {viol:.3g}")
    return D, viol


def padded_decomposition(dist, delta: float, seed=0, beta: float | None = None) -> PaddedPartition:
    """One draw of random-order ball carving at scale ``delta``.

    A common radius R is drawn uniformly from [delta/4, delta/2] and the
    vertices are visited in a random order; each unassigned vertex within R
    of the current center joins its block. Every block lies in a ball of
    radius R <= delta/2, so its diameter is at most delta (the radius is
    shrunk by any triangle slack in the input to keep this exact).
    """
    D, viol = check_metric(dist)
    if not delta > 0:
        raise ValueError("scale delta must be positive")
    n = D.shape[0]
    rng = make_rng(seed, 41) if not isinstance(seed, np.random.Generator) else seed
    hi = delta / 2 - viol / 2
    R = rng.uniform(delta / 4, max(hi, delta / 4))
    order = rng.permutation(n)
    labels = np.full(n, -1)
    blocks = []
    for c in order:
        members = np.flatnonzero((labels < 0) & (D[c] <= R))
        if members.size:
            labels[members] = len(blocks)
            blocks.append(tuple(int(v) for v in members))
    labels.setflags(write=False)
    part = PaddedPartition(tuple(blocks), labels, float(delta),
                           float(padding_beta(n) if beta is None else beta),
                           int(seed) if isinstance(seed, (int, np.integer)) else 0)
    diam = part.diameters(D)
    if diam.max() > delta + 1e-9:
        raise AssertionError(f"block diameter {diam.max():.12g} exceeds scale {delta:.12g}")
    return part


def padding_frequency(dist, delta: float, beta: float, draws: int, seed=0) -> np.ndarray:
    """Fraction of draws in which B(u, delta/beta) stays inside the block of u, per u."""
    D, _ = check_metric(dist)
    hits = np.zeros(D.shape[0])
    for k in range(draws):
        part = padded_decomposition(D, delta, make_rng(seed, 42, k), beta)
        hits += part.pad_radius(D) > delta / beta
    return hits / draws


# --- rounding with padded decompositions ---------------------------------------------


@dataclass
class GenusRoundResult:
    branch: str                 # "cut" | "small_set" | "inconclusive"
    cut: CutResult | None
    phi_sdp: float
    gamma: float
    scale: float
    beta_pad: float
    constant: float | None      # sparsity / (beta_pad / eps^2 * phi_SDP) on the small-set branch
    draws: int
    small_mass: float | None    # mean over draws of the squared norm held by blocks of size <= n/r
    eroded_cut: float | None    # mean capacity cut by the eroded blocks
    eroded_bound: float | None  # (beta/Delta) sum_e c_e ||X_u - X_v||^2
    seed: int

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "cut": None if self.cut is None else self.cut.to_json(),
            "phi_sdp": self.phi_sdp,
            "gamma": self.gamma,
            "scale": self.scale,
            "beta_pad": self.beta_pad,
            "constant": self.constant,
            "draws": self.draws,
            "small_mass": self.small_mass,
            "eroded_cut": self.eroded_cut,
            "eroded_bound": self.eroded_bound,
            "seed": self.seed,
        }


def vector_graph_metric(g: Graph, sol: VectorSolution) -> np.ndarray:
    """Shortest-path metric of g with edge lengths ||X_u - X_v||^2."""
    L = np.where(g.weights > 0, sol.sq_dists(), 0.0)
    # zero-length edges must survive the sparse conversion
    L = np.where(g.weights > 0, np.maximum(L, 1e-300), 0.0)
    D = shortest_path(L, method="D", directed=False)
    D[D <= 1e-290] = 0.0
    np.fill_diagonal(D, 0.0)
    return D


def eroded_blocks(part: PaddedPartition, pad: np.ndarray, tau: float, limit: float) -> list[np.ndarray]:
    """For each block of at most ``limit`` vertices, its members whose tau-ball stays inside."""
    keep = pad > tau
    out = []
    for b in part.blocks:
        if len(b) <= limit:
            members = np.array(b)
            members = members[keep[members]]
            if members.size:
                out.append(members)
    return out


def genus_round(g: Graph, sol: VectorSolution | None, r: int, eps: float, beta_pad: float,
                seed: int = 0, delta: float | None = None, draws: int = 200) -> GenusRoundResult:
    """Either a cut of sparsity <= (1 + eps) phi_SDP or a set of at most n/r vertices.

    The cut branch fires when some r columns leave relative residual at most
    eps / (1 + eps), so that threshold rounding is certified. Otherwise
    blocks of a padded decomposition of the vector metric at scale
    ``delta`` (default (eps/2) sum ||X_u||^2 / n) are eroded with a uniform
    threshold tau in [0, delta / beta_pad] and the sparsest eroded block of
    at most n/r vertices is returned, rescored from scratch.
    """
    from .orth_sep import _best_r_columns

    if sol is None:
        sol = solve_sdp(g)
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    if beta_pad < 1:
        raise ValueError("padding parameter must be at least 1")
    n = g.n
    S, gam = _best_r_columns(sol.X, r)
    sq = sol.sq_norms
    scale = (eps / 2) * float(sq.sum()) / n if delta is None else float(delta)
    if gam <= eps / (1 + eps):
        cut, gam = threshold_round(g, sol, S, seed=seed)
        return GenusRoundResult("cut", cut, sol.objective, gam, scale, beta_pad, None, 0,
                                None, None, None, seed)
    if scale <= 0:
        raise GraphError("degenerate solution: zero total squared norm")
    D = vector_graph_metric(g, sol)
    limit = n / r
    edge_len = np.triu(g.weights * sol.sq_dists(), 1)
    bound = beta_pad / scale * float(edge_len.sum())
    iu, ju = np.nonzero(np.triu(g.weights, 1))
    cw = g.weights[iu, ju]
    best = None
    masses, cuts = [], []
    for k in range(draws):
        rng = make_rng(seed, 43, k)
        part = padded_decomposition(D, scale, rng, beta_pad)
        pad = part.pad_radius(D)
        masses.append(sum(float(sq[list(b)].sum()) for b in part.blocks if len(b) <= limit))
        tau = rng.uniform(0, scale / beta_pad)
        lab = np.full(n, -1)
        for i, T in enumerate(eroded_blocks(part, pad, tau, limit)):
            lab[T] = i
            best = better(best, cut_quality(g, T))
        sep = ((lab[iu] >= 0) | (lab[ju] >= 0)) & (lab[iu] != lab[ju])
        cuts.append(float(cw[sep].sum()))
    if best is None:
        return GenusRoundResult("inconclusive", None, sol.objective, gam, scale, beta_pad, None,
                                draws, float(np.mean(masses)), float(np.mean(cuts)), bound, seed)
    best = cut_quality(g, best.set)
    if best.size > limit:
        raise AssertionError(f"small-set branch returned {best.size} > n/r = {limit} vertices")
    unit = beta_pad / eps**2 * sol.objective
    const = best.sparsity / unit if unit > 0 else (0.0 if best.sparsity == 0 else math.inf)
    return GenusRoundResult("small_set", best, sol.objective, gam, scale, beta_pad, const, draws,
                            float(np.mean(masses)), float(np.mean(cuts)), bound, seed)


# --- region-growing partition oracle ---------------------------------------------------


@dataclass(frozen=True)
class RegionBlock:
    vertices: tuple[int, ...]
    seed_set: tuple[int, ...]
    center: int
    radius: float       # growth radius from the seed set
    boundary: float     # capacity from this block to the vertices still remaining


@dataclass
class RegionOracleState:
    """Mutable state of the oracle; a single owner applies removals in sequence."""

    g: Graph
    lengths: np.ndarray
    F_r: float
    alpha: float
    delta: float
    r: float
    remaining: np.ndarray
    budget: float           # n alpha / (20 delta log(30 r))
    total_length: float     # W = sum_e c_e w_e
    seed_volume: float      # volume credited per seed vertex
    kappa: float            # boundary / volume ratio accepted when growing
    D0: float               # radius bound for every growth
    C: float                # D0 / (delta log(30 r) log(max(r W / (n alpha), e)))
    blocks: list[RegionBlock] = field(default_factory=list)
    boundary: float = 0.0

    def to_json(self) -> dict:
        return {
            "remaining": np.flatnonzero(self.remaining).tolist(),
            "blocks": [{"vertices": list(b.vertices), "center": b.center, "radius": b.radius,
                        "boundary": b.boundary} for b in self.blocks],
            "boundary": self.boundary,
            "budget": self.budget,
            "D0": self.D0,
            "C": self.C,
        }


def region_oracle_init(g: Graph, lengths, F_r: float, alpha: float, delta: float, r: float) -> RegionOracleState:
    """Set up the oracle for edge lengths ``lengths`` (an n x n matrix read on the edges of g).

    Growth from a seed set S stops at the first radius where the boundary
    capacity is at most kappa times the ball volume (seed volume
    v0 |S| plus the length-weighted capacity inside). Volumes of removed
    blocks are disjoint, so the cumulative boundary stays below
    kappa (W + v0 n) = budget; the volume cannot grow faster than
    exp(kappa rho), which bounds every radius by
    D0 = ln(1 + W F(r) / (v0 n)) / kappa.
    """
    n = g.n
    w = np.asarray(lengths, dtype=float)
    if w.shape != (n, n) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise GraphError("edge lengths must be a finite nonnegative n x n matrix")
    w = np.where(g.weights > 0, (w + w.T) / 2, 0.0)
    if not (F_r >= 1 and alpha > 0 and delta > 0 and r >= 1):
        raise ValueError("need F(r) >= 1, alpha > 0, delta > 0 and r >= 1")
    budget = n * alpha / (20 * delta * math.log(30 * r))
    W = float(np.sum(np.triu(g.weights * w, 1)))
    v0 = W / n if W > 0 else budget / n
    kappa = budget / (W + v0 * n)
    D0 = math.log(1 + W * F_r / (v0 * n)) / kappa
    ref = delta * math.log(30 * r) * math.log(max(r * W / (n * alpha), math.e))
    return RegionOracleState(g, w, float(F_r), float(alpha), float(delta), float(r),
                             np.ones(n, dtype=bool), budget, W, v0, kappa, D0, D0 / ref)


def _multi_source_dist(W: np.ndarray, L: np.ndarray, alive: np.ndarray, sources) -> np.ndarray:
    n = W.shape[0]
    dist = np.full(n, np.inf)
    heap = [(0.0, int(s)) for s in sources]
    for s in sources:
        dist[s] = 0.0
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v in np.flatnonzero((W[u] > 0) & alive):
            nd = d + L[u, v]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, int(v)))
    return dist


def region_oracle_remove(state: RegionOracleState, S) -> tuple[frozenset, RegionOracleState]:
    """Grow a region around S inside the remaining vertices and remove it.

    Returns (S', state) with S subset of S' subset of the remaining set. The
    state is updated in place and also returned.
    """
    S = sorted(set(int(s) for s in S))
    n = state.g.n
    if not S or len(S) < n / state.F_r - 1e-12:
        raise ValueError(f"seed set has {len(S)} vertices; at least n/F(r) = {n / state.F_r:.3g} required")
    if any(not (0 <= s < n) or not state.remaining[s] for s in S):
        raise ValueError("seed set is not contained in the remaining vertices")
    Wt, L, alive = state.g.weights, state.lengths, state.remaining
    dist = _multi_source_dist(Wt, L, alive, S)
    reach = np.flatnonzero(np.isfinite(dist))
    levels = np.unique(dist[reach])
    iu, ju = np.nonzero(np.triu(Wt, 1) * np.outer(alive, alive))
    c, lw = Wt[iu, ju], L[iu, ju]
    du, dv = dist[iu], dist[ju]
    v0 = state.seed_volume * len(S)
    rho = None
    for k, a in enumerate(levels):
        inside_u, inside_v = du <= a, dv <= a
        both = inside_u & inside_v
        cross = inside_u ^ inside_v
        near = np.where(inside_u, du, dv)[cross]
        vol = v0 + float(np.sum(c[both] * lw[both])) + float(np.sum(c[cross] * (a - near)))
        cap = float(np.sum(c[cross]))
        nxt = levels[k + 1] if k + 1 < len(levels) else np.inf
        # volume grows with slope cap until the next level
        need = a + max(0.0, cap / state.kappa - vol) / cap if cap > 0 else a
        if need < nxt:
            rho, ball, boundary = need, reach[dist[reach] <= a], cap
            break
    if rho is None:
        raise AssertionError("region growing did not terminate")
    if rho > state.D0 * (1 + 1e-9) + 1e-12:
        raise AssertionError(f"growth radius {rho:.6g} exceeds D0 = {state.D0:.6g}")
    ball = tuple(int(v) for v in ball)
    ecc = [_multi_source_dist(Wt, L, alive, [j])[list(ball)].max() for j in S]
    center = S[int(np.argmin(ecc))]
    state.remaining = alive.copy()
    state.remaining[list(ball)] = False
    state.boundary += boundary
    if state.boundary > state.budget * (1 + 1e-9):
        raise AssertionError(f"cumulative boundary {state.boundary:.6g} exceeds budget {state.budget:.6g}")
    state.blocks.append(RegionBlock(ball, tuple(S), center, float(rho), boundary))
    return frozenset(ball), state
