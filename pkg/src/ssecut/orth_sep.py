"""Orthogonal separators and the anchor-selection rounding built on them.

The separator follows the hyperplane-word construction: draw a norm
threshold rho uniform in (0, 1], keep the points with ||X_u||^2 >= rho, give
every point the sign pattern of L Gaussian projections (its word), and
return the points whose word equals a uniformly random word. Then
Pr[u in S] = alpha ||X_u||^2 with alpha = 2^-L.

Because alpha is tiny for useful L, the estimators integrate the random word
out exactly: for a fixed (rho, projections) draw, u lands in S with
probability alpha * [u kept], and u, v land together with probability
alpha * [both kept, same word]. All reported frequencies are in units of
alpha unless stated otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .embed_sdp import VectorSolution, solve_sdp, translate_to_origin
from .graph_core import CutResult, Graph, better, cut_quality
from .gs_round import ContractViolation, projection_gamma, threshold_round
from .rng import as_rng, make_rng

ZERO_NORM = 1e-12
CHUNK = 2000


@dataclass(frozen=True)
class SeparatorParams:
    m: float
    beta: float
    c: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"separation quality m must be >= 1, got {self.m}")
        if not 0 < self.beta < 1:
            raise ValueError(f"separation threshold beta must be in (0, 1), got {self.beta}")

    @classmethod
    def from_r_delta(cls, r: int, delta: float, beta: float, c: float = 1.0) -> "SeparatorParams":
        return cls(10 * r * r / delta, beta, c)

    @property
    def word_len(self) -> int:
        """ceil(log2 m') with m' = m^(c / beta)."""
        return max(1, math.ceil(self.c / self.beta * math.log2(max(self.m, 2.0)) - 1e-12))

    @property
    def alpha(self) -> float:
        return 2.0 ** -self.word_len


def _prepare(X) -> np.ndarray:
    V = X.vectors if isinstance(X, VectorSolution) else np.asarray(X, dtype=float)
    if V.ndim != 2 or V.shape[1] == 0 or V.shape[0] == 0:
        raise ValueError("separator needs a nonempty set of vectors with dimension >= 1")
    sq = np.sum(V**2, axis=1)
    if sq.max() > 1 + 1e-7:
        raise ValueError(f"squared norms must be <= 1, got {sq.max():.6g}; rescale first")
    return V


def _directions(V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    return np.where(norms > ZERO_NORM, V / np.maximum(norms, ZERO_NORM), 0.0)


def _draws(V: np.ndarray, params: SeparatorParams, rng, count: int, rho_max=None):
    """Yield (kept mask (T, n), same-word matrix (T, n, n)) in chunks."""
    U = _directions(V)
    sq = np.sum(V**2, axis=1)
    L = params.word_len
    done = 0
    while done < count:
        T = min(CHUNK, count - done)
        top = 1.0 if rho_max is None else rho_max
        rho = top * (1.0 - rng.random(T))
        G = rng.normal(size=(T, L, V.shape[1]))
        words = np.packbits(np.einsum("tld,nd->tnl", G, U) > 0, axis=-1)
        same = np.all(words[:, :, None, :] == words[:, None, :, :], axis=-1)
        kept = sq[None, :] >= rho[:, None]
        yield kept, same
        done += T


def sample_separator(X, params: SeparatorParams, seed=0) -> frozenset:
    """One draw from the separator distribution (usually empty: alpha = 2^-L)."""
    V = _prepare(X)
    rng = as_rng(seed)
    U = _directions(V)
    sq = np.sum(V**2, axis=1)
    rho = 1.0 - rng.random()
    G = rng.normal(size=(params.word_len, V.shape[1]))
    words = (U @ G.T) > 0
    target = rng.random(params.word_len) < 0.5
    hit = (sq >= rho) & np.all(words == target[None, :], axis=1)
    return frozenset(int(u) for u in np.flatnonzero(hit))


def sample_containing(X, params: SeparatorParams, u: int, rng, count: int = 1) -> np.ndarray:
    """Draws of S conditioned on u in S, as a (count, n) boolean array.

    Given u in S the threshold is uniform on (0, ||X_u||^2] and S is the
    kept part of u's word cell.
    """
    V = _prepare(X)
    sq_u = float(np.sum(V[u] ** 2))
    if sq_u <= ZERO_NORM:
        raise ValueError(f"point {u} has zero norm and is never in a separator set")
    out = []
    for kept, same in _draws(V, params, rng, count, rho_max=sq_u):
        out.append(kept & same[:, u, :])
    return np.concatenate(out, axis=0)


@dataclass
class PropertyEstimate:
    alpha: float
    trials: int
    incl: np.ndarray          # Pr[u in S] / alpha
    incl_sigma: np.ndarray
    joint: np.ndarray         # Pr[u, v in S] / alpha
    joint_sigma: np.ndarray
    separated: np.ndarray     # pairs under condition 2
    cond1_violations: list
    cond2_violations: list
    cut: np.ndarray           # Pr[I_S(u) != I_S(v)] / alpha
    distortion_hat: float     # max over probe pairs of cut / ||X_u - X_v||^2
    distortion_avg: float     # sum cut / sum ||X_u - X_v||^2 over probe pairs
    small_ratio: float | None = None    # E[|S| I(|S| <= thr)] / E[|S|]
    s_prime: np.ndarray | None = None   # Pr[u in S'] / alpha, S' = S if |S| >= thr else empty
    small_cells: list = field(default_factory=list)
    sq: np.ndarray | None = None

    @property
    def alpha_hat(self) -> np.ndarray:
        """Empirical alpha_u = Pr[u in S] / ||X_u||^2 (absolute scale)."""
        return self.alpha * self.incl / np.where(self.sq > ZERO_NORM, self.sq, np.nan)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "trials": self.trials,
            "incl": self.incl.tolist(),
            "cond1_violations": self.cond1_violations,
            "cond2_violations": self.cond2_violations,
            "distortion_hat": self.distortion_hat,
            "distortion_avg": self.distortion_avg,
            "small_ratio": self.small_ratio,
        }


def estimate_properties(X, params: SeparatorParams, trials: int = 100_000, seed=0,
                        probe_pairs=None, size_threshold: float | None = None,
                        collect_small: int = 0) -> PropertyEstimate:
    """Monte Carlo estimates of the three separator conditions.

    Condition 1 flags pairs whose incl/||X||^2 ratios differ by more than
    4 sigma; condition 2 flags separated pairs whose joint frequency exceeds
    min(incl)/m by more than 3 sigma. ``probe_pairs`` defaults to all pairs.
    With ``size_threshold`` the small-set mass ratio and the S' inclusion
    frequencies are estimated as well; ``collect_small`` keeps up to that
    many distinct cells of size <= threshold.
    """
    V = _prepare(X)
    n = V.shape[0]
    rng = as_rng(seed)
    sq = np.sum(V**2, axis=1)
    D = np.sum((V[:, None, :] - V[None, :, :]) ** 2, axis=-1)
    inc = np.zeros(n)
    joint = np.zeros((n, n))
    cut = np.zeros((n, n))
    small_mass = total_mass = 0.0
    s_prime = np.zeros(n)
    cells: dict[bytes, np.ndarray] = {}
    for kept, same in _draws(V, params, rng, trials):
        kf = kept.astype(float)
        inc += kf.sum(axis=0)
        both = kept[:, :, None] & kept[:, None, :]
        j = both & same
        joint += j.sum(axis=0)
        xor = kept[:, :, None] ^ kept[:, None, :]
        cut += xor.sum(axis=0) + 2.0 * (both & ~same).sum(axis=0)
        if size_threshold is not None:
            cell = j  # cell[t, u, v]: v shares u's kept word cell
            size = cell.sum(axis=2)
            small = kept & (size <= size_threshold + 1e-9)
            small_mass += small.sum()
            total_mass += kept.sum()
            s_prime += (kept & (size >= size_threshold - 1e-9)).sum(axis=0)
            if collect_small and len(cells) < collect_small:
                rows = cell[small]
                for key, row in zip(map(bytes, np.packbits(rows, axis=1)), rows):
                    if key not in cells:
                        cells[key] = row
                        if len(cells) >= collect_small:
                            break
    T = trials
    inc /= T
    joint /= T
    cut /= T
    inc_sigma = np.sqrt(np.maximum(inc * (1 - inc), 1.0 / T) / T)
    joint_sigma = np.sqrt(np.maximum(joint * (1 - joint), 1.0 / T) / T)
    nz = sq > ZERO_NORM
    mins = np.minimum(sq[:, None], sq[None, :])
    separated = (D >= params.beta * mins - 1e-12) & ~np.eye(n, dtype=bool)
    cond1 = []
    ratio = np.where(nz, inc / np.where(nz, sq, 1.0), np.nan)
    rsig = np.where(nz, inc_sigma / np.where(nz, sq, 1.0), np.nan)
    for u, v in itertools.combinations(np.flatnonzero(nz), 2):
        if abs(ratio[u] - ratio[v]) > 4 * math.hypot(rsig[u], rsig[v]):
            cond1.append((int(u), int(v)))
    zero_hits = [int(u) for u in np.flatnonzero(~nz) if inc[u] > 0]
    cond1 += [(u, u) for u in zero_hits]
    cond2 = []
    for u, v in zip(*np.nonzero(np.triu(separated, 1))):
        if joint[u, v] > min(inc[u], inc[v]) / params.m + 3 * joint_sigma[u, v]:
            cond2.append((int(u), int(v)))
    if probe_pairs is None:
        probe_pairs = list(itertools.combinations(range(n), 2))
    num = den = 0.0
    worst = 0.0
    for u, v in probe_pairs:
        if D[u, v] > 1e-12:
            num += cut[u, v]
            den += D[u, v]
            worst = max(worst, cut[u, v] / D[u, v])
    est = PropertyEstimate(
        alpha=params.alpha, trials=T, incl=inc, incl_sigma=inc_sigma, joint=joint,
        joint_sigma=joint_sigma, separated=separated, cond1_violations=cond1,
        cond2_violations=cond2, cut=cut, distortion_hat=worst,
        distortion_avg=num / den if den > 0 else 0.0,
        small_ratio=(small_mass / total_mass if total_mass else None) if size_threshold is not None else None,
        s_prime=s_prime / T if size_threshold is not None else None,
        small_cells=list(cells.values()),
        sq=sq,
    )
    return est


# --- anchor selection -----------------------------------------------------------


@dataclass
class AnchorReport:
    status: str                     # "success" | "small_set" | "inconclusive"
    anchors: list
    marked_partition: list
    residual: float | None
    constant: float | None          # residual / (delta + beta)
    failure: CutResult | None
    params: SeparatorParams
    delta: float
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "anchors": self.anchors,
            "marked_partition": [sorted(M) for M in self.marked_partition],
            "residual": self.residual,
            "constant": self.constant,
            "failure": None if self.failure is None else self.failure.to_json(),
            "m": self.params.m,
            "beta": self.params.beta,
            "word_len": self.params.word_len,
            "delta": self.delta,
            "seed": self.seed,
            "diagnostics": self.diagnostics,
        }


def _best_small(g: Graph | None, cells, limit: float) -> CutResult | None:
    if g is None:
        return None
    best = None
    for row in cells:
        S = np.flatnonzero(row)
        if 0 < S.size <= limit and S.size < g.n:
            best = better(best, cut_quality(g, S))
    return best


def select_anchors(X, r: int, delta: float, beta: float, seed=0, g: Graph | None = None,
                   trials: int = 20_000, guard: int | None = None, c: float = 1.0) -> AnchorReport:
    """Iterative anchor selection over orthogonal-separator sets.

    X must contain the origin (see ``translate_to_origin``); it is rescaled
    so the largest squared norm is 1. Each round takes the largest-norm
    unmarked point X_i of X', draws separator sets conditioned on X_i until
    one has at least 2n/r points and at most 2n/m points farther than
    beta ||X_i||^2, then marks that set and the 2 beta ||X_i||^2 ball.
    At most 200 * guard draws per round (guard defaults to n).
    """
    if not 0 < beta < 0.25:
        raise ValueError(f"beta must lie in (0, 0.25), got {beta}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    V = X.vectors if isinstance(X, VectorSolution) else np.asarray(X, dtype=float)
    n = V.shape[0]
    sq0 = np.sum(V**2, axis=1)
    if sq0.min() > ZERO_NORM:
        raise ValueError("the vector set must contain the origin; apply translate_to_origin first")
    if sq0.max() <= ZERO_NORM:
        raise ValueError("all vectors are zero")
    V = V / math.sqrt(sq0.max())
    sq = np.sum(V**2, axis=1)
    D = np.sum((V[:, None, :] - V[None, :, :]) ** 2, axis=-1)
    params = SeparatorParams.from_r_delta(r, delta, beta, c)
    rng = make_rng(seed, 7)
    big = 2 * n / r
    far_cap = 2 * n / params.m
    est = estimate_properties(V, params, trials, rng, size_threshold=big, collect_small=256)
    nz = sq > ZERO_NORM
    x_prime = nz & (est.s_prime >= sq / 2)
    diag = {
        "lemma_small_ratio": est.small_ratio,
        "x_prime_volume": float(sq[x_prime].sum() / sq.sum()),
        "word_len": params.word_len,
        "attempts": [],
    }
    budget = 200 * (guard if guard is not None else n)
    marked = np.zeros(n, dtype=bool)
    owner = np.full(n, -1)
    anchors: list[int] = []
    sets: list[np.ndarray] = []
    partition: list[set] = []
    small_seen = list(est.small_cells)
    # X' must carry volume >= 1 - 2 delta; otherwise the small-set lemma failed
    status = "success" if diag["x_prime_volume"] >= 1 - 2 * delta - 1e-12 else "small_set"
    while status == "success" and np.any(x_prime & ~marked):
        cand = np.flatnonzero(x_prime & ~marked)
        i = int(cand[np.argmax(sq[cand])])  # argmax keeps the lowest index on ties
        thr = beta * sq[i]
        found = None
        tries = 0
        while found is None and tries < budget:
            batch = min(200, budget - tries)
            draws = sample_containing(V, params, i, rng, batch)
            tries += batch
            sizes = draws.sum(axis=1)
            far = (draws & (D[i] > thr + 1e-12)[None, :]).sum(axis=1)
            ok = np.flatnonzero((sizes >= big - 1e-9) & (far <= far_cap + 1e-9))
            small_seen.extend(draws[sizes <= big + 1e-9][:32])
            if ok.size:
                found = draws[ok[0]]
        diag["attempts"].append(tries)
        if found is None:
            status = "small_set"
            break
        new = found & ~np.any(np.array(sets, dtype=bool).reshape(-1, n), axis=0) if sets else found
        if new.sum() < n / r - 1e-9:
            raise ContractViolation(
                f"anchor {i}: separator set adds {int(new.sum())} new points < n/r = {n / r:.3g}")
        ball = D[i] <= 2 * thr + 1e-12
        M = np.flatnonzero((found | ball) & ~marked)
        idx = len(anchors)
        owner[M] = idx
        marked[M] = True
        close = np.flatnonzero((owner >= 0) & (owner < idx) & (D[i] <= thr + 1e-12))
        owner[close] = idx
        anchors.append(i)
        sets.append(found)
        partition = [set(np.flatnonzero(owner == k).tolist()) for k in range(idx + 1)]
        if len(anchors) > r:
            raise ContractViolation(f"anchor selection ran past r = {r} rounds")
    if status == "success":
        for k, (a, Mk) in enumerate(zip(anchors, partition)):
            vol = float(sq[list(Mk)].sum())
            if vol < len(Mk) * sq[a] / 3 - 1e-9:
                raise ContractViolation(f"volume accounting fails on M_{k}: {vol:.6g} < |M| ||X_i||^2 / 3")
        residual = projection_gamma(V.T, anchors) if anchors else 1.0
        return AnchorReport("success", anchors, partition, residual, residual / (delta + beta), None,
                            params, delta, int(seed) if isinstance(seed, int) else 0, diag)
    witness = _best_small(g, small_seen, big)
    status = "small_set" if witness is not None else "inconclusive"
    return AnchorReport(status, anchors, partition, None, None, witness, params, delta,
                        int(seed) if isinstance(seed, int) else 0, diag)


# --- round or small set -----------------------------------------------------------


@dataclass
class OrthRoundResult:
    branch: str                 # "cut" | "small_set" | "inconclusive"
    cut: CutResult | None
    phi_sdp: float
    gamma: float | None
    kappa: float | None         # measured constant of the small-set sparsity bound
    anchors: AnchorReport | None
    seed: int

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "cut": None if self.cut is None else self.cut.to_json(),
            "phi_sdp": self.phi_sdp,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "anchors": None if self.anchors is None else self.anchors.to_json(),
            "seed": self.seed,
        }


def _best_r_columns(X: np.ndarray, r: int, exhaustive_limit: int = 5000) -> tuple[list[int], float]:
    from .gs_round import greedy_columns

    n = X.shape[1]
    r = min(r, n)
    S = greedy_columns(X, r)
    best = (projection_gamma(X, S), sorted(S))
    if math.comb(n, r) <= exhaustive_limit:
        for T in itertools.combinations(range(n), r):
            gam = projection_gamma(X, T)
            if gam < best[0] - 1e-15:
                best = (gam, list(T))
    return best[1], best[0]


def round_or_small_set(g: Graph, r: int, eps: float, seed: int = 0, sol: VectorSolution | None = None,
                       trials: int = 20_000) -> OrthRoundResult:
    """Either a cut of sparsity <= (1 + eps) phi_SDP or a set of at most 2n/r vertices.

    First looks for r columns with relative residual <= eps / (1 + eps),
    which the rounding turns into a (1 + eps)-approximate cut. Otherwise the
    vectors are translated to contain the origin and anchors are chosen
    from separator sets with delta = beta = eps / 8; anchors plus the origin
    vertex are rounded the same way. If neither reaches (1 + eps) phi_SDP,
    the sparsest separator cell of at most 2n/r vertices is returned.
    """
    if sol is None:
        sol = solve_sdp(g)
    n = g.n
    target = eps / (1 + eps)
    S, gam = _best_r_columns(sol.X, r)
    best_cut = None
    if gam <= target:
        best_cut, gam = threshold_round(g, sol, S, seed=seed)
        if best_cut.sparsity <= (1 + eps) * sol.objective + 1e-6:
            return OrthRoundResult("cut", best_cut, sol.objective, gam, None, None, seed)
    shifted, t = translate_to_origin(sol)
    delta = beta = min(eps / 8, 0.24)
    rep = select_anchors(shifted, r, delta, beta, seed=seed, g=g, trials=trials)
    if rep.status == "success":
        cols = sorted(set(rep.anchors) | {t})
        cut, gam2 = threshold_round(g, sol, cols, seed=seed)
        if cut.sparsity <= (1 + eps) * sol.objective + 1e-6:
            return OrthRoundResult("cut", cut, sol.objective, gam2, None, rep, seed)
    witness = rep.failure
    if witness is None:
        # cells from the separator analysis are the corollary's candidates
        V = shifted.vectors / math.sqrt(max(np.sum(shifted.vectors**2, axis=1).max(), ZERO_NORM))
        params = SeparatorParams.from_r_delta(r, delta, beta)
        est = estimate_properties(V, params, trials, make_rng(seed, 9), size_threshold=2 * n / r,
                                  collect_small=256)
        witness = _best_small(g, est.small_cells, 2 * n / r)
    if witness is None:
        return OrthRoundResult("inconclusive", best_cut, sol.objective, None, None, rep, seed)
    scale = math.sqrt(math.log(n) * math.log(max(r, 2)) / eps) / eps**1.5 * sol.objective
    kappa = witness.sparsity / scale if scale > 0 else float("inf")
    return OrthRoundResult("small_set", witness, sol.objective, None, kappa, rep, seed)
