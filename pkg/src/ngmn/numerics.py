"""Dense linear algebra primitives used by the closed-form solvers.

Every matrix is a 2-D float64 ``numpy.ndarray`` in column-per-sample
orientation (features x samples). The decompositions below wrap LAPACK
through numpy and add a deterministic sign convention and explicit
positive-definiteness checks.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError, ShapeError

SYMMETRY_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-10
EIG_FLOOR = 1e-12


class SvdResult(NamedTuple):
    """Full SVD ``P = U @ diag(s) @ V.T`` with ``U`` (p x p) and ``V`` (q x q)."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Validate ``A`` as a finite, non-empty 2-D float64 array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return A


def _fix_signs(U: np.ndarray, V: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of every U column made non-negative; paired V
    # columns follow for the first k (singular) directions.
    U = U.copy()
    V = V.copy()
    idx = np.argmax(np.abs(U), axis=0)
    flip = U[idx, np.arange(U.shape[1])] < 0
    U[:, flip] *= -1.0
    V[:, np.flatnonzero(flip[:k])] *= -1.0
    if V.shape[1] > k:
        extra = np.arange(k, V.shape[1])
        vidx = np.argmax(np.abs(V[:, extra]), axis=0)
        vflip = V[vidx, extra] < 0
        V[:, extra[vflip]] *= -1.0
    return U, V


def svd(P) -> SvdResult:
    """Full singular value decomposition with a deterministic sign convention.

    In each column of ``U`` the entry of largest magnitude (lowest row index on
    ties) is non-negative. The matching columns of ``V`` are flipped with it so
    that ``U[:, :k] @ diag(s) @ V[:, :k].T`` still reconstructs ``P``.
    """
    P = as_matrix(P, "P")
    U, s, Vt = np.linalg.svd(P, full_matrices=True)
    U, V = _fix_signs(U, Vt.T, len(s))
    return SvdResult(U, s, V)


def _check_symmetric(A, name: str) -> np.ndarray:
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * scale:
        raise InvalidInputError(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def _spd_eigh(A, name: str) -> tuple[np.ndarray, np.ndarray]:
    A = _check_symmetric(A, name)
    w, Q = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(A))))
    if w[0] < -NEGATIVE_EIG_TOL * scale:
        raise NotPositiveDefiniteError(
            f"{name} has eigenvalue {w[0]:.3e} < 0"
        )
    return np.maximum(w, 0.0), Q


def spd_sqrt(A) -> np.ndarray:
    """Symmetric square root ``S`` of a symmetric PSD matrix, ``S @ S = A``.

    Round-off negatives down to ``-1e-10`` (scaled by ``max|A|``) are clamped
    to zero; anything more negative raises :class:`NotPositiveDefiniteError`.
    """
    w, Q = _spd_eigh(A, "A")
    S = (Q * np.sqrt(w)) @ Q.T
    return 0.5 * (S + S.T)


def spd_inverse(A) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via eigendecomposition."""
    w, Q = _spd_eigh(A, "A")
    Ainv = (Q / np.maximum(w, EIG_FLOOR)) @ Q.T
    return 0.5 * (Ainv + Ainv.T)


def centering_matrix(n: int) -> np.ndarray:
    """``I_n - (1/n) 1 1^T``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def weighted_centering(alpha, n: int | None = None) -> np.ndarray:
    """Weighted centering matrix ``I_n - D 1 1^T / (1^T D 1)`` with ``D = diag(alpha)``.

    Right-multiplying a data matrix by it subtracts the ``alpha``-weighted
    column mean, so ``C_hat @ D @ 1 = 0``.
    """
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if n is None:
        n = alpha.size
    if alpha.size != n:
        raise ShapeError(f"alpha has {alpha.size} entries, expected {n}")
    if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
        raise InvalidInputError("weights must be finite and non-negative")
    total = alpha.sum()
    if total <= 0:
        raise InvalidInputError("weights must have a positive sum")
    if np.all(alpha == alpha[0]):
        # uniform weights reduce to the ordinary centering matrix, bit for bit
        return centering_matrix(n)
    return np.eye(n) - np.outer(alpha, np.ones(n)) / total


def weighted_mean(X: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Column-weighted mean ``X D 1 / (1^T D 1)`` as a 1-D vector."""
    return X @ alpha / alpha.sum()


def weighted_scatter(X: np.ndarray, alpha: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """``X C_hat D C_hat^T Y^T`` without forming any n x n matrix.

    Equals the alpha-weighted cross-scatter of the weighted-centered columns
    of ``X`` and ``Y`` (``Y`` defaults to ``X``).
    """
    Xc = X - weighted_mean(X, alpha)[:, None]
    if Y is None:
        Yc = Xc
    else:
        Yc = Y - weighted_mean(Y, alpha)[:, None]
    return (Xc * alpha) @ Yc.T
