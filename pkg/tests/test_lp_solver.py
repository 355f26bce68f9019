import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from ssecut.lp_solver import FlowNetwork, LpProblem, max_flow, solve_lp


def vertex_enumeration(c, A, b):
    """Max c@x over {A x <= b, x >= 0} by enumerating all basic solutions."""
    m, n = A.shape
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best = None
    for rows in itertools.combinations(range(m + n), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            v = c @ x
            best = v if best is None else max(best, v)
    return best


def test_trivial_lps():
    r = solve_lp(LpProblem.from_rows([1.0], [([1.0], "<=", 5.0)]))
    assert r.optimal and r.value == pytest.approx(5) and r.x[0] == pytest.approx(5)
    r = solve_lp(LpProblem.from_rows([1.0], [([1.0], "<=", 1.0), ([1.0], ">=", 2.0)]))
    assert r.status == "infeasible"
    r = solve_lp(LpProblem.from_rows([1.0, 0.0], [([0.0, 1.0], "<=", 1.0)]))
    assert r.status == "unbounded"


def test_equality_and_negative_rhs():
    # max x + y s.t. x - y = -1, x + y <= 3  -> x=1, y=2
    r = solve_lp(LpProblem.from_rows([1, 1], [([1, -1], "=", -1), ([1, 1], "<=", 3)]))
    assert r.value == pytest.approx(3)
    assert r.x == pytest.approx([1, 2])


@pytest.mark.parametrize("seed", range(6))
def test_random_lp_vs_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 2, size=(8, 5))
    b = rng.uniform(1, 4, size=8)
    c = rng.normal(size=5)
    r = solve_lp(LpProblem(c, A, ["<="] * 8, b))
    assert r.optimal
    assert r.value == pytest.approx(vertex_enumeration(c, A, b), abs=1e-6)
    assert np.all(A @ r.x <= b + 1e-7) and np.all(r.x >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_duality(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 7, size=2)
    A = rng.uniform(-1, 2, size=(m, n))
    b = rng.uniform(0.5, 3, size=m)
    c = rng.uniform(-1, 2, size=n)
    A = np.vstack([A, np.ones(n)])  # keep it bounded
    b = np.append(b, 10.0)
    primal = solve_lp(LpProblem(c, A, ["<="] * (m + 1), b))
    # dual: min b@y s.t. A^T y >= c, y >= 0
    dual = solve_lp(LpProblem(-b, A.T, [">="] * n, c))
    assert primal.optimal and dual.optimal
    assert primal.value == pytest.approx(-dual.value, abs=1e-6)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None))
    assert primal.value == pytest.approx(-ref.fun, abs=1e-6)


def test_degenerate_cycling_example():
    # Beale's example cycles under the largest-coefficient rule
    c = np.array([0.75, -20, 0.5, -6])
    A = np.array([[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]])
    r = solve_lp(LpProblem(c, A, ["<="] * 3, [0, 0, 1]))
    assert r.value == pytest.approx(1.25)


def test_max_flow_examples():
    net = FlowNetwork(3, 0, 2, [(0, 1, 1), (1, 2, 1)])
    assert max_flow(net).value == pytest.approx(1)
    net = FlowNetwork(4, 0, 3, [(0, 1, 2), (1, 3, 2), (0, 2, 3), (2, 3, 3)])
    res = max_flow(net)
    assert res.value == pytest.approx(5)
    assert 0 in res.source_side and 3 not in res.source_side


def flow_lp_value(net):
    arcs = net.arcs
    k = len(arcs)
    c = np.array([1.0 if u == net.source else (-1.0 if v == net.source else 0.0) for u, v, _ in arcs])
    rows = [(np.eye(k)[i], "<=", cap) for i, (_, _, cap) in enumerate(arcs)]
    for node in range(net.n_nodes):
        if node in (net.source, net.sink):
            continue
        row = np.array([(1.0 if v == node else 0.0) - (1.0 if u == node else 0.0) for u, v, _ in arcs])
        rows.append((row, "=", 0.0))
    return solve_lp(LpProblem.from_rows(c, rows)).value


def random_network(seed, n=8, p=0.4):
    rng = np.random.default_rng(seed)
    arcs = [(u, v, float(rng.uniform(0, 5))) for u in range(n) for v in range(n) if u != v and rng.random() < p]
    return FlowNetwork(n, 0, n - 1, arcs)


@pytest.mark.parametrize("seed", range(8))
def test_max_flow_matches_lp_and_conserves(seed):
    net = random_network(seed)
    res = max_flow(net)
    assert res.value == pytest.approx(flow_lp_value(net), abs=1e-7)
    assert res.value == pytest.approx(res.cut_capacity(net), abs=1e-9)
    bal = np.zeros(net.n_nodes)
    for (u, v, cap), f in zip(net.arcs, res.flow):
        assert -1e-12 <= f <= cap + 1e-9
        bal[u] -= f
        bal[v] += f
    assert np.allclose(np.delete(bal, [net.source, net.sink]), 0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.floats(0, 3))
def test_max_flow_monotone_in_capacity(seed, bump):
    net = random_network(seed, n=6, p=0.5)
    if not net.arcs:
        return
    base = max_flow(net).value
    k = seed % len(net.arcs)
    u, v, c = net.arcs[k]
    arcs = list(net.arcs)
    arcs[k] = (u, v, c + bump)
    assert max_flow(FlowNetwork(6, 0, 5, arcs)).value >= base - 1e-9


def test_network_validation():
    with pytest.raises(ValueError):
        FlowNetwork(2, 0, 0)
    with pytest.raises(ValueError):
        FlowNetwork(2, 0, 1, [(0, 1, -1.0)])
