import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssecut import graph_core as gc
from ssecut import embed_sdp as es
from ssecut.oracle import brute_sparsest
from conftest import two_triangles


def assert_feasible(sol, g, tol=1e-6):
    V = sol.vectors
    assert np.abs(V.sum(axis=0)).max() <= 1e-7
    assert sol.sq_norms.max() <= 1 + 1e-7
    assert es.triangle_violation(sol.sq_dists()) <= tol
    D = sol.sq_dists()
    assert sol.objective == pytest.approx(np.sum(np.triu(g.weights * D, 1)) / sol.nu, abs=1e-7)
    assert sol.nu == pytest.approx(np.sum(V**2), abs=1e-12)


def test_two_triangles_zero_objective():
    g = gc.normalize_regular(two_triangles())
    sol = es.solve_base_embedding(g, 0.5)
    assert sol.objective == pytest.approx(0, abs=1e-6)
    assert_feasible(sol, g)
    D = sol.sq_dists()
    assert np.allclose(D[:3, :3], 0, atol=1e-5) and np.allclose(D[3:, 3:], 0, atol=1e-5)
    assert np.allclose(sol.vectors[0], -sol.vectors[3], atol=1e-4)


def test_k4_and_c4_bounds(k4, c4):
    assert es.solve_base_embedding(k4, 0.5).objective <= 4 / 3 + 1e-6
    obj = es.solve_base_embedding(c4, 0.5).objective
    assert 0.5 - 1e-6 <= obj <= 1 + 1e-6


def test_nu_identity_for_balance():
    g = gc.normalize_regular(gc.cycle_graph(8))
    for k in (1, 2, 3, 4):
        mu = k / 8
        sol = es.solve_base_embedding(g, mu)
        # sum ||X_u||^2 = n mu (1 - mu); the unscaled form mu(1-mu) would be off by n
        assert sol.nu == pytest.approx(8 * mu * (1 - mu), abs=1e-6)
        assert sol.sq_norms.min() >= mu**2 - 1e-6 and sol.sq_norms.max() <= 1 - mu + 1e-6


def test_relaxation_beats_cuts_of_same_balance():
    rng = np.random.default_rng(3)
    g = gc.random_graph(8, 0.5, rng, weighted=True)
    sol = es.solve_base_embedding(g, 3 / 8)
    for S in itertools.combinations(range(8), 3):
        assert sol.objective <= gc.cut_quality(g, S).sparsity + 1e-6


def test_bad_mu():
    with pytest.raises(ValueError):
        es.solve_base_embedding(gc.cycle_graph(6), 0.3)


@pytest.mark.parametrize("seed", range(8))
def test_soundness_and_sweep(seed):
    rng = np.random.default_rng(100 + seed)
    g = gc.random_graph(int(rng.integers(4, 13)), 0.4, rng, weighted=bool(seed % 2))
    sol = es.solve_sdp(g)
    assert_feasible(sol, g)
    assert sol.objective <= brute_sparsest(g).sparsity + 1e-6
    per_mu = [es.solve_base_embedding(g, k / g.n).objective for k in range(1, g.n // 2 + 1)]
    assert sol.objective == pytest.approx(min(per_mu), abs=1e-9)


def test_mean_shift_examples():
    assert np.allclose(es.mean_shift([[1, 0], [0, 1]]), [[0.5, -0.5], [-0.5, 0.5]])
    V = np.array([[1.0, 2.0], [-1.0, -2.0]])
    assert np.array_equal(es.mean_shift(V), V)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(1, 5), st.integers(0, 10_000))
def test_mean_shift_properties(n, dim, seed):
    x = np.random.default_rng(seed).normal(size=(n, dim))
    X = es.mean_shift(x)
    assert np.allclose(X.sum(axis=0), 0, atol=1e-10)
    assert np.allclose(es.squared_distances(X), es.squared_distances(x), atol=1e-10)
    pair_sum = sum(np.sum((x[u] - x[v]) ** 2) for u in range(n) for v in range(u + 1, n))
    assert np.sum(X**2) == pytest.approx(pair_sum / n, abs=1e-7)


def _sol(V):
    V = np.asarray(V, dtype=float)
    return es.VectorSolution(V, 0.0, 0.5, float(np.sum(V**2)))


def test_translate_examples():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    out, t = es.translate_to_origin(_sol(V))
    assert t == 0 and np.array_equal(out.vectors, V)
    p = np.array([0.6, 0.8])
    out, t = es.translate_to_origin(_sol([p, -p]))
    assert t == 0
    assert out.nu == pytest.approx(4 * p @ p) and out.nu == pytest.approx(2 * 2 * p @ p)


@pytest.mark.parametrize("seed", range(5))
def test_translate_bound_exhaustive(seed):
    V = es.mean_shift(np.random.default_rng(seed).normal(size=(8, 3)))
    out, t = es.translate_to_origin(_sol(V))
    totals = [np.sum((V - V[s]) ** 2) for s in range(8)]
    ok = [s for s in range(8) if totals[s] <= 2 * np.sum(V**2) + 1e-12]
    assert t == ok[0]
    assert np.allclose(out.vectors[t], 0)
    assert np.allclose(es.squared_distances(out.vectors), es.squared_distances(V))


def test_lasserre_integral_passes():
    sol = es.integral_lasserre(5, 1, [{0, 2}])
    rep = es.validate_lasserre(sol)
    assert rep.passed
    assert all(w <= 1e-12 for _, w in rep.conditions.values())
    assert rep.vectors is not None


def test_lasserre_bad_empty_norm():
    sol = es.integral_lasserre(4, 1, [{0}])
    e = sol.index()[((), ())]
    G = sol.gram.copy()
    G[e, e] = 0.9
    rep = es.validate_lasserre(es.LasserreSolution(4, 1, sol.keys, G))
    assert not rep.conditions["unit_empty"][0]
    assert rep.conditions["unit_empty"][1] == pytest.approx(0.1)


def test_lasserre_convex_combination_of_c4_cuts():
    g = gc.normalize_regular(gc.cycle_graph(4))
    sol = es.integral_lasserre(4, 2, [{0, 1}, {1, 2}], probs=[0.3, 0.7])
    rep = es.validate_lasserre(sol, g)
    assert rep.passed
    for S in [(0,), (0, 1), (1, 3)]:
        for f in itertools.product((0, 1), repeat=len(S)):
            if sol.gram[sol.index()[(S, f)]].any():
                p = es.conditional_probabilities(sol, S, f)
                assert np.all(p >= -1e-12) and np.all(p <= 1 + 1e-12)
    # x_u = x_u(1) has squared norm Pr[u labeled 1]
    x = rep.vectors
    assert x.objective <= 1 + 1e-9


def test_lasserre_missing_entries_and_json(tmp_path):
    sol = es.integral_lasserre(3, 1, [{1}])
    p = tmp_path / "las.json"
    import json
    p.write_text(json.dumps(sol.to_json()))
    back = es.load_lasserre(p)
    assert back.keys == sol.keys and np.array_equal(back.gram, sol.gram)
    short = es.LasserreSolution(3, 1, sol.keys[:-1], sol.gram[:-1, :-1])
    with pytest.raises(ValueError, match="missing"):
        es.validate_lasserre(short)


def test_lasserre_detects_inconsistency():
    sol = es.integral_lasserre(3, 1, [{1}])
    idx = sol.index()
    G = sol.gram.copy()
    a, b = idx[((0,), (0,))], idx[((0,), (1,))]
    G[a, b] = G[b, a] = 0.2  # conflicting labels must be orthogonal
    rep = es.validate_lasserre(es.LasserreSolution(3, 1, sol.keys, G))
    assert not rep.conditions["orthogonality"][0]
