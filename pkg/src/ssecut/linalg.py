"""Dense symmetric eigendecomposition, residual projections and spectral sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LinAlgError(ValueError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # orthonormal columns

    def __iter__(self):
        return iter((self.values, self.vectors))


def _check_symmetric(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinAlgError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > tol * scale:
        raise LinAlgError("matrix is not symmetric")
    return (A + A.T) / 2


def jacobi_eigh(A: np.ndarray, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius mass drops below
    ``1e-12 * ||A||_F``.
    """
    A = _check_symmetric(A).copy()
    n = A.shape[0]
    V = np.eye(n)
    threshold = 1e-12 * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    else:
        raise LinAlgError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], V[:, order])


def eigh(A: np.ndarray, method: str = "lapack") -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    ``method="jacobi"`` uses the in-house cyclic Jacobi solver; the default
    calls LAPACK through numpy, which is what every hot loop in the package
    uses.
    """
    A = _check_symmetric(A)
    if method == "jacobi":
        return jacobi_eigh(A)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    w, V = np.linalg.eigh(A)
    return EigenDecomposition(w, V)


def eigvalsh(A: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(_check_symmetric(A))


def orthonormal_basis(X: np.ndarray, cols=None, rank_tol: float = 1e-10) -> np.ndarray:
    """Modified Gram-Schmidt basis of span{X[:, c] : c in cols}.

    Columns whose residual norm falls below ``rank_tol`` times the largest
    column norm are dropped.
    """
    X = np.asarray(X, dtype=float)
    cols = range(X.shape[1]) if cols is None else list(cols)
    sub = X[:, cols] if len(cols) else np.zeros((X.shape[0], 0))
    if sub.shape[1] == 0:
        return np.zeros((X.shape[0], 0))
    scale = np.linalg.norm(sub, axis=0).max()
    if scale == 0:
        return np.zeros((X.shape[0], 0))
    basis: list[np.ndarray] = []
    for k in range(sub.shape[1]):
        v = sub[:, k].copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for q in basis:
                v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > rank_tol * scale:
            basis.append(v / nv)
    return np.array(basis).T if basis else np.zeros((X.shape[0], 0))


def project_residual(X: np.ndarray, S) -> np.ndarray:
    """Return ``X_S^perp X``: every column with its component in span(X_S) removed."""
    S = list(S)
    if not S:
        raise LinAlgError("projection set S must be nonempty")
    Q = orthonormal_basis(X, S)
    X = np.asarray(X, dtype=float)
    return X - Q @ (Q.T @ X)


def sum_smallest(A: np.ndarray, k: int) -> float:
    """Sum of the k smallest eigenvalues of a symmetric matrix."""
    w = eigvalsh(A)
    if not 1 <= k <= len(w):
        raise LinAlgError(f"k must be in 1..{len(w)}, got {k}")
    return float(w[:k].sum())


def sum_tail_descending(A: np.ndarray, r: int) -> float:
    """sum_{i >= r+1} sigma_i(A) with sigma sorted descending.

    Equivalently trace(A) minus the r largest eigenvalues.
    """
    w = eigvalsh(A)
    n = len(w)
    if not 0 <= r <= n:
        raise LinAlgError(f"r must be in 0..{n}, got {r}")
    return float(w[: n - r].sum())


def is_psd(A: np.ndarray, tol: float = 1e-7) -> bool:
    w = eigvalsh(A)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    return bool(w[0] >= -tol * scale) if len(w) else True
