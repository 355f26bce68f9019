import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssecut import graph_core as gc
from ssecut import oracle
from ssecut import sse_flow as sf


def k6():
    return gc.normalize_regular(gc.complete_graph(6))


def c8():
    return gc.normalize_regular(gc.cycle_graph(8))


def random_direct_flow(n, rng, density=0.6, scale=1.0):
    paths = []
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < density:
            paths.append(((i, j), scale * rng.random()))
    return sf.MultiFlow(n, tuple(paths))


# --- data model ---------------------------------------------------------------


def test_multiflow_demands_and_json_roundtrip(tmp_path):
    F = sf.MultiFlow(4, (((0, 1, 2), 0.5), ((2, 3), 0.25), ((0, 2), 0.1)))
    D = F.demands
    assert D[0, 2] == pytest.approx(0.6) and D[2, 0] == pytest.approx(0.6)
    assert F.degrees.tolist() == pytest.approx([0.6, 0.0, 0.85, 0.25])
    p = tmp_path / "f.json"
    p.write_text(json.dumps(F.to_json()))
    assert sf.load_flow(p, 4) == F


@pytest.mark.parametrize("paths,msg", [
    ((((0,), 1.0),), "fewer than two"),
    ((((0, 1, 0), 1.0),), "starts and ends"),
    ((((0, 7), 1.0),), "vertex range"),
    ((((0, 1), -1.0),), "invalid amount"),
])
def test_multiflow_rejects_bad_paths(paths, msg):
    with pytest.raises(sf.FlowError, match=msg):
        sf.MultiFlow(3, paths)


def test_load_flow_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"paths": [\n  {"verts": [0, 1], "amount": }]}')
    with pytest.raises(sf.FlowError, match="line 2"):
        sf.load_flow(p, 3)


# --- verify_capacity --------------------------------------------------------------


def test_capacity_empty_flow_passes():
    assert sf.verify_capacity(sf.MultiFlow(8, ()), c8()).ok


def test_capacity_single_path_at_min_capacity():
    g = gc.from_edges(3, [(0, 1, 2.0), (1, 2, 0.5)])
    res = sf.verify_capacity(sf.MultiFlow(3, (((0, 1, 2), 0.5),)), g)
    assert res.ok and res.worst_excess == pytest.approx(0.0, abs=1e-12)


def test_capacity_reports_overloaded_shared_edge():
    g = gc.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (1, 3, 1)])
    F = sf.MultiFlow(4, (((0, 1, 2), 0.7), ((0, 1, 3), 0.6)))
    res = sf.verify_capacity(F, g)
    assert not res.ok and res.worst_edge == (0, 1)
    assert res.worst_excess == pytest.approx(0.3)


def test_capacity_rejects_non_edge():
    with pytest.raises(sf.FlowError, match="non-edge"):
        sf.verify_capacity(sf.MultiFlow(8, (((0, 4), 0.1),)), c8())


# --- SSE verifiers ---------------------------------------------------------------


def test_uniform_k6_is_sse():
    v = sf.verify_sse(sf.uniform_flow(6, 1.0), 3, 1.0, 0.5)
    assert v.ok and v.witness is None
    # |S| <= 2: crossing / |S| = (6 - |S|)/5, minimized at |S| = 2
    assert v.min_expansion == pytest.approx(4 / 5)


def test_zero_flow_witness_is_singleton():
    v = sf.verify_sse(sf.MultiFlow(6, ()), 3, 1.0, 0.1)
    assert not v.ok and v.witness.size == 1 and v.min_expansion == 0


def test_degree_violation_fails_sse():
    v = sf.verify_sse(sf.uniform_flow(6, 2.0), 3, 1.0, 0.5)
    assert not v.ok and not v.degree_ok


@pytest.mark.parametrize("seed", range(5))
def test_random_c8_flow_matches_demand_graph_oracle(seed):
    rng = np.random.default_rng(seed)
    F = random_direct_flow(8, rng)
    d = max(F.degrees.max(), 1e-9)
    dg = gc.Graph(F.demands)
    for r in (2, 4):
        for lo, verdict in ((1, sf.verify_sse(F, r, d, 0.3)),
                            (max(1, math.ceil(8 / (3 * r))), sf.verify_weak_sse(F, r, d, 0.3))):
            ref = min(gc.cut_weight(dg, S) / len(S)
                      for k in range(lo, 8 // r + 1) for S in itertools.combinations(range(8), k))
            assert verdict.min_expansion == pytest.approx(ref / d, abs=1e-12)
            assert verdict.ok == (ref / d >= 0.3 - 1e-9)


def test_weak_range_must_contain_an_integer():
    with pytest.raises(sf.FlowError, match="no integer"):
        sf.verify_weak_sse(sf.uniform_flow(5, 1.0), 6, 1.0, 0.1)


# --- verify_spectral ---------------------------------------------------------------


def test_uniform_k6_spectral_certificate():
    F = sf.uniform_flow(6, 1.0)
    cert = sf.verify_spectral(F, 2, 1.0, 1.0)
    assert cert.lambda_measured == pytest.approx(6 / 5)
    assert cert.valid
    assert sf.verify_spectral(F, 2, 1.0, 1.2).valid
    assert not sf.verify_spectral(F, 2, 1.0, 1.21).valid


def test_zero_flow_certificate_invalid():
    assert not sf.verify_spectral(sf.MultiFlow(4, ()), 2, 1.0, 0.0).valid


def test_c8_edge_flow_certificate():
    lam2 = 1 - math.cos(math.pi / 4)
    F = sf.edge_flow(c8())
    assert sf.verify_spectral(F, 2, 1.0, lam2).valid
    assert not sf.verify_spectral(F, 2, 1.0, lam2 + 1e-6).valid


def test_certificate_json_roundtrip():
    cert = sf.verify_spectral(sf.uniform_flow(6, 1.0), 2, 1.0, 1.0)
    back = sf.SpectralCertificate.from_json(json.loads(json.dumps(cert.to_json())))
    assert back == cert and back.valid


# --- weak_to_sse ----------------------------------------------------------------------


def test_weak_to_sse_keeps_an_sse_flow():
    F = sf.uniform_flow(6, 1.0)
    res = sf.weak_to_sse(F, k6(), 3, 1.0, 0.5)
    assert res.flow is F and res.removed == ()


def _bad_pair_instance(link: float):
    """Vertices 0, 1 carry no demand; 2..11 carry uniform demand; g links {0,1} to the rest by `link`."""
    n = 12
    F = sf.MultiFlow(n, tuple(((i, j), 1.0 / 9) for i, j in itertools.combinations(range(2, n), 2)))
    g = gc.disjoint_union(gc.complete_graph(2), gc.complete_graph(10)).weights.copy()
    g[1, 2] = g[2, 1] = link
    g[0, 3] = g[3, 0] = link
    return F, gc.Graph(g)


def test_weak_to_sse_small_set_branch():
    F, g = _bad_pair_instance(0.05)
    assert sf.verify_weak_sse(F, 1.5, 1.0, 0.2).ok
    res = sf.weak_to_sse(F, g, 1.5, 1.0, 0.2)
    assert res.flow is None
    Q = gc.cut_quality(g, res.small_set.set)
    assert Q.expansion < 1.0 * 0.2
    assert set(res.removed) == {0, 1}


def test_weak_to_sse_flow_branch_passes_at_beta_over_6():
    F, g = _bad_pair_instance(1.0)
    res = sf.weak_to_sse(F, g, 1.5, 1.0, 0.2)
    assert res.small_set is None
    assert sf.verify_sse(res.flow, 1.5, 1.0, 0.2 / 6).ok


def test_weak_to_sse_rejects_non_weak_input():
    with pytest.raises(sf.FlowError, match="weak SSE"):
        sf.weak_to_sse(sf.MultiFlow(6, ()), k6(), 3, 1.0, 0.5)


def test_decompose_st_flow_recovers_value():
    from ssecut.lp_solver import FlowNetwork, max_flow

    net = FlowNetwork(4, 0, 3, [(0, 1, 2.0), (0, 2, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 2.0)])
    res = max_flow(net)
    paths = sf.decompose_st_flow(net, res.flow)
    assert sum(a for _, a in paths) == pytest.approx(res.value)
    assert all(p[0] == 0 and p[-1] == 3 for p, _ in paths)


# --- comb_to_spectral -------------------------------------------------------------------


def test_comb_to_spectral_zero_flow():
    out = sf.comb_to_spectral(sf.MultiFlow(8, ()), c8(), 1.0)
    assert np.allclose(out.flow.degrees, 0.5)
    assert out.capacity_ok


def test_comb_to_spectral_uniform_k6():
    out = sf.comb_to_spectral(sf.uniform_flow(6, 1.0), k6(), 1.0)
    assert np.allclose(out.flow.degrees, 1.0)


def test_comb_to_spectral_rejects_degree_violation():
    with pytest.raises(sf.FlowError, match="degree"):
        sf.comb_to_spectral(sf.uniform_flow(6, 2.0), k6(), 1.0)


@pytest.mark.parametrize("seed", range(10))
def test_comb_to_spectral_window_and_sandwich(seed):
    rng = np.random.default_rng(seed)
    g = c8()
    # capacity-feasible random flow on edges of g (half capacity, degree <= d)
    d = 0.8
    F = sf.MultiFlow(8, tuple(((i, j), rng.uniform(0, 0.5) * w * d) for i, j, w in g.edges()))
    out = sf.comb_to_spectral(F, g, d)
    deg = out.flow.degrees
    assert deg.min() >= d / 2 - 1e-12 and deg.max() <= d + 1e-12
    assert out.capacity_ok
    L = out.flow.laplacian()
    lam = np.linalg.eigvalsh(L)
    s = 1 / np.sqrt(deg)
    lam_n = np.linalg.eigvalsh(s[:, None] * L * s[None, :])
    assert np.all(lam >= deg.min() * lam_n - 1e-9)
    assert np.all(lam <= deg.max() * lam_n + 1e-9)
    assert lam[3] >= (d / 2) * lam_n[3] - 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_normalized_laplacian_sandwich(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    F = random_direct_flow(n, rng, density=0.8)
    deg = F.degrees
    if deg.min() <= 1e-6:
        return
    L = F.laplacian()
    s = 1 / np.sqrt(deg)
    lam = np.linalg.eigvalsh(L)
    lam_n = np.linalg.eigvalsh(s[:, None] * L * s[None, :])
    assert np.all(lam / deg.max() <= lam_n + 1e-9)
    assert np.all(lam / deg.min() >= lam_n - 1e-9)


# --- disjoint sets -----------------------------------------------------------------------


def test_disjoint_expansion_half_of_k6():
    assert sf.disjoint_expansion_check(sf.uniform_flow(6, 1.0), [[0, 1, 2]]) == pytest.approx(3 / 5)


def test_disjoint_expansion_all_singletons():
    F = random_direct_flow(6, np.random.default_rng(1))
    got = sf.disjoint_expansion_check(F, [[v] for v in range(6)], d=2.0)
    assert got == pytest.approx(F.degrees.max() / 2.0)


def test_disjoint_expansion_rejects_overlap():
    with pytest.raises(sf.FlowError, match="overlaps"):
        sf.disjoint_expansion_check(sf.uniform_flow(4, 1.0), [[0, 1], [1, 2]])


def naive_min_max(F, r, d):
    best = np.inf
    for labels in itertools.product(range(r + 1), repeat=F.n):
        sets = [[v for v in range(F.n) if labels[v] == k] for k in range(1, r + 1)]
        if all(sets):
            best = min(best, sf.disjoint_expansion_check(F, sets, d))
    return best


@pytest.mark.parametrize("r", [1, 2, 3])
def test_min_max_disjoint_matches_naive(r):
    F = random_direct_flow(6, np.random.default_rng(r))
    assert sf.min_max_disjoint_expansion(F, r, 0.7) == pytest.approx(naive_min_max(F, r, 0.7))


@pytest.mark.parametrize("seed", range(4))
def test_spectral_to_comb_exhaustive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 10))
    F = random_direct_flow(n, rng)
    d = F.degrees.max()
    lam = np.linalg.eigvalsh(F.laplacian())
    for r in (1, 2, 3):
        assert sf.min_max_disjoint_expansion(F, r, d) >= lam[r - 1] / (2 * d) - 1e-9


def test_spectral_to_comb_certified_c8_flow():
    res = sf.construct_spectral_flow(c8(), 1, 1.0, iterations=15)
    cert = res.certificate
    F = res.flow
    lam2 = np.linalg.eigvalsh(F.laplacian())[1]
    worst = np.inf
    for k in range(1, 8):
        for A in itertools.combinations(range(8), k):
            rest = [v for v in range(8) if v not in A]
            for j in range(1, len(rest) + 1):
                for B in itertools.combinations(rest, j):
                    worst = min(worst, sf.disjoint_expansion_check(F, [A, B], cert.d))
    assert worst >= lam2 / (2 * cert.d) - 1e-9


# --- construction ----------------------------------------------------------------------


def test_path_basis_direct_edges_first():
    basis = sf.path_basis(c8(), k=2)
    assert (0, 1) in basis
    assert all(len(p) - 1 <= 8 for p in basis)


def test_path_basis_requires_connected():
    with pytest.raises(gc.GraphError, match="connected"):
        sf.path_basis(gc.disjoint_union(gc.complete_graph(3), gc.complete_graph(3)))


def check_result(res, g, d):
    F = res.flow
    assert sf.verify_capacity(F, g, tol=1e-7).ok
    deg = F.degrees
    assert deg.min() >= d / 2 - 1e-7 and deg.max() <= d + 1e-7
    h = np.array(res.history)
    assert np.all(np.diff(h) >= -1e-9)
    m = res.certificate.r
    lam = np.linalg.eigvalsh(F.laplacian())
    assert res.objective == pytest.approx(lam[:m].sum(), abs=1e-9)
    assert res.certificate.lambda_measured >= res.objective / m - 1e-9
    assert res.certificate.valid


def test_construct_k6():
    g = k6()
    res = sf.construct_spectral_flow(g, 2, 1.0, iterations=20)
    assert res.objective >= 3.6 - 1e-7
    check_result(res, g, 1.0)


def test_construct_k2():
    g = gc.complete_graph(2)
    res = sf.construct_spectral_flow(g, 1, 1.0, iterations=5)
    assert res.flow.demands[0, 1] == pytest.approx(1.0)
    lam = np.linalg.eigvalsh(res.flow.laplacian())
    assert lam[0] == pytest.approx(0.0, abs=1e-12)
    # the objective sums the bottom 2r = 2 eigenvalues: 0 + 2 * demand
    assert res.objective == pytest.approx(2.0)


def test_construct_c8_beats_edge_flow():
    g = c8()
    res = sf.construct_spectral_flow(g, 2, 1.0, iterations=20)
    edge_val = np.linalg.eigvalsh(gc.laplacian(g))[:4].sum()
    assert res.objective >= edge_val - 1e-9
    check_result(res, g, 1.0)


def test_construct_barbell_fallback():
    g = gc.normalize_regular(gc.barbell_graph(4))
    res = sf.construct_spectral_flow(g, 1, 0.5, iterations=10, target_lambda=10.0)
    assert res.fallback is not None
    assert res.fallback == oracle.brute_small_set(g, 1)[3]
    check_result(res, g, 0.5)


def test_construct_infeasible_window():
    # vertex 2 hangs on an edge of capacity 0.1, below the required degree d/2
    g = gc.from_edges(3, [(0, 1, 1.0), (1, 2, 0.1)])
    with pytest.raises(sf.FlowError, match="infeasible"):
        sf.construct_spectral_flow(g, 1, 1.0, iterations=3)


def test_higher_order_cheeger_constant_recorded():
    """Phi_r of the demand graph against sqrt(lambda_2r(normalized) log r); reports the ratio."""
    ratios = []
    for g in (k6(), c8(), gc.normalize_regular(gc.barbell_graph(4))):
        res = sf.construct_spectral_flow(g, 2, 1.0, iterations=10)
        F = res.flow
        deg = F.degrees
        s = 1 / np.sqrt(deg)
        lam_n = np.linalg.eigvalsh(s[:, None] * F.laplacian() * s[None, :])
        phi_r = oracle.brute_small_set(gc.Graph(F.demands), 2)[1]
        ratios.append(phi_r / math.sqrt(lam_n[3] * math.log(2)))
    print("higher-order Cheeger ratios:", [round(x, 4) for x in ratios])
    assert all(np.isfinite(ratios))
