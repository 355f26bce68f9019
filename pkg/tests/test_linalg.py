import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssecut import graph_core as gc
from ssecut import linalg


def charpoly_roots_by_bisection(A):
    """Eigenvalues from sign changes of det(A - tI) on a fine grid, refined by bisection."""
    n = A.shape[0]
    bound = np.abs(A).sum(axis=1).max() + 1
    f = lambda t: np.linalg.det(A - t * np.eye(n))
    grid = np.linspace(-bound, bound, 20001)
    vals = np.array([f(t) for t in grid])
    roots = []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(200):
                m = (a + b) / 2
                if f(a) * f(m) <= 0:
                    b = m
                else:
                    a = m
            roots.append((a + b) / 2)
    return np.array(roots)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigh_examples(method):
    assert np.allclose(linalg.eigh(np.eye(3), method).values, 1)
    c4 = gc.normalize_regular(gc.cycle_graph(4))
    assert np.allclose(linalg.eigh(gc.laplacian(c4), method).values, [0, 1, 1, 2])


@pytest.mark.parametrize("seed", range(5))
def test_eigh_matches_charpoly(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(3, 3))
    A = B + B.T
    oracle = charpoly_roots_by_bisection(A)
    assert len(oracle) == 3
    for method in ("lapack", "jacobi"):
        assert np.allclose(linalg.eigh(A, method).values, oracle, atol=1e-8)


def test_eigh_rejects_asymmetric():
    with pytest.raises(linalg.LinAlgError):
        linalg.eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize("n", [1, 2, 7, 20, 64])
def test_jacobi_reconstruction(n):
    rng = np.random.default_rng(n)
    B = rng.normal(size=(n, n))
    A = B + B.T
    w, V = linalg.jacobi_eigh(A)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(A - V @ np.diag(w) @ V.T) <= 1e-7 * np.linalg.norm(A)
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-8)
    assert np.abs(A @ V - V * w).max() <= 1e-8 * max(np.linalg.norm(A), 1)


def test_project_residual_examples():
    rng = np.random.default_rng(1)
    u = rng.normal(size=4)
    X = np.outer(u, rng.normal(size=5))
    assert np.allclose(linalg.project_residual(X, [2]), 0)
    Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
    R = linalg.project_residual(Q, [1])
    assert np.allclose(R[:, 1], 0)
    assert np.allclose(np.delete(R, 1, axis=1), np.delete(Q, 1, axis=1))


def test_project_residual_matches_explicit_projector():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(4, 6))
    B = X[:, [1, 2]]
    P = np.eye(4) - B @ np.linalg.inv(B.T @ B) @ B.T
    R = linalg.project_residual(X, [1, 2])
    assert np.linalg.norm(R) == pytest.approx(np.linalg.norm(P @ X), rel=1e-10)


def test_project_residual_zero_column_in_S():
    X = np.array([[0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    R = linalg.project_residual(X, [0, 1])
    assert np.allclose(R, [[0, 0, 0], [0, 0, 1]])


def test_sums():
    assert linalg.sum_smallest(np.eye(4), 2) == 2.0
    c4 = gc.laplacian(gc.normalize_regular(gc.cycle_graph(4)))
    assert linalg.sum_tail_descending(c4, 1) == pytest.approx(2.0)
    with pytest.raises(linalg.LinAlgError):
        linalg.sum_smallest(np.eye(3), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_spectral_sum_identities(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    A = B @ B.T
    for k in range(1, n):
        top = linalg.sum_smallest(-A, n - k) * -1
        assert linalg.sum_smallest(A, k) + top == pytest.approx(np.trace(A), abs=1e-8)
    assert linalg.sum_smallest(A, n) == pytest.approx(np.trace(A), abs=1e-9 * max(1, np.trace(A)))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(2, 9), st.integers(0, 10_000))
def test_projection_idempotent(rows, cols, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    S = sorted(rng.choice(cols, size=rng.integers(1, cols + 1), replace=False))
    R1 = linalg.project_residual(X, S)
    Q = linalg.orthonormal_basis(X, S)
    assert np.abs(Q.T @ R1).max(initial=0) <= 1e-8
    R2 = R1 - Q @ (Q.T @ R1)
    assert np.allclose(R1, R2, atol=1e-9)
