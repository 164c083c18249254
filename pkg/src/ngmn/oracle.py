"""Independent reference computations for certifying the closed forms.

Nothing here calls into the solvers it is meant to check (apart from
:func:`g_sign_probe`, whose job is to compare two runs of the solver). Linear
systems go through ``numpy.linalg.solve``/``qr`` rather than the
eigendecomposition helpers in :mod:`ngmn.numerics`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def simplex_projection(v) -> np.ndarray:
    """Euclidean projection onto ``{a : sum(a) = 1, a >= 0}`` by sort and threshold."""
    v = np.asarray(v, dtype=np.float64).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def fd_gradient(objective: Callable[[np.ndarray], float], point, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(point, dtype=np.float64).ravel().copy()
    g = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + step
        fp = objective(x)
        x[i] = orig - step
        fm = objective(x)
        x[i] = orig
        g[i] = (fp - fm) / (2.0 * step)
    return g


def fd_stationarity(objective: Callable[[np.ndarray], float], point, step: float = 1e-5) -> float:
    """Norm of the central-difference gradient at ``point``."""
    if not 1e-7 <= step <= 1e-4:
        raise ValueError(f"step must lie in [1e-7, 1e-4], got {step}")
    return float(np.linalg.norm(fd_gradient(objective, point, step)))


def random_feasible_manifold_points(S, count: int, c: int, seed: int = 0) -> list[np.ndarray]:
    """``W = S^-1 Q`` for random ``Q`` with orthonormal columns (d x c).

    Every point satisfies ``W^T S^2 W = I_c``.
    """
    S = np.asarray(S, dtype=np.float64)
    d = S.shape[0]
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        Q, R = np.linalg.qr(rng.normal(size=(d, c)))
        Q = Q * np.sign(np.diag(R))  # Haar-distributed orthonormal columns
        points.append(np.linalg.solve(S, Q))
    return points


def trace_objective(W, X, G, alpha) -> float:
    """``tr(W^T X D_hat G^T)`` with ``D_hat = C_hat D C_hat^T`` formed explicitly."""
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.size
    D = np.diag(alpha)
    C = np.eye(n) - np.outer(alpha, np.ones(n)) / alpha.sum()
    # X C subtracts the alpha-weighted mean from every column of X
    Dhat = C @ D @ C.T
    return float(np.trace(W.T @ X @ Dhat @ G.T))


def constraint_matrix(X, alpha, lam: float) -> np.ndarray:
    """``X D_hat X^T + lam I`` with ``D_hat`` formed explicitly (n x n)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.size
    C = np.eye(n) - np.outer(alpha, np.ones(n)) / alpha.sum()
    Dhat = C @ np.diag(alpha) @ C.T
    return X @ Dhat @ X.T + lam * np.eye(X.shape[0])


def weighted_svm_objective(W, b, M, alpha, gamma, lam, X, Ypm) -> float:
    """Sum of alpha-weighted squared slack residuals plus both penalties, sample by sample."""
    total = 0.0
    for i in range(X.shape[1]):
        r = W.T @ X[:, i] + b - Ypm[:, i] - Ypm[:, i] * M[:, i]
        total += alpha[i] * float(r @ r)
    return total + lam * float(np.sum(W**2)) + gamma * float(np.sum(np.asarray(alpha) ** 2))


def slack_kkt_residual(M, Ypm, S) -> float:
    """Largest violation of the optimality conditions of ``min_{M >= 0} ||Y*S - 1 - M||^2``.

    Checks primal feasibility ``M >= 0``, ``M >= Y*S - 1`` and complementary
    slackness ``(M - (Y*S - 1)) * M = 0``.
    """
    E = np.asarray(Ypm) * np.asarray(S) - 1.0
    M = np.asarray(M)
    return float(max(
        np.max(np.maximum(-M, 0.0)),
        np.max(np.maximum(E - M, 0.0)),
        np.max(np.abs((M - E) * M)),
    ))


def ridge_classifier_oracle(X_train, labels, X_test, lam: float = 1.0) -> np.ndarray:
    """Linear least-squares classifier on +-1 targets with an unpenalised bias.

    Solves the augmented normal equations directly.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    c = int(labels.max()) + 1
    T = -np.ones((c, labels.size))
    T[labels, np.arange(labels.size)] = 1.0
    Z = np.vstack([X_train, np.ones(labels.size)])
    P = lam * np.eye(Z.shape[0])
    P[-1, -1] = 0.0
    B = np.linalg.solve(Z @ Z.T + P, Z @ T.T)
    Zt = np.vstack([np.asarray(X_test, dtype=np.float64), np.ones(X_test.shape[1])])
    return np.argmax(B.T @ Zt, axis=0)


@dataclass(frozen=True)
class GSignReport:
    objective_plus: float  # G = Y + Y*M
    objective_minus: float  # G = Y - Y*M
    winner: str  # "plus", "minus" or "tie"


def g_sign_probe(X, Ypm, alpha, lam: float, M, gamma: float = 0.0, tie_tol: float = 1e-12) -> GSignReport:
    """Fit the head's (W, b) with either sign of the slack term in its target and
    compare the weighted objective (which always uses ``Y + Y*M``)."""
    from .decision_layer import update_weights_bias

    X = np.asarray(X, dtype=np.float64)
    Ypm = np.asarray(Ypm, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    values = {}
    for name, sign in (("plus", 1.0), ("minus", -1.0)):
        W, b = update_weights_bias(X, Ypm + sign * Ypm * M, alpha, lam)
        values[name] = weighted_svm_objective(W, b, M, alpha, gamma, lam, X, Ypm)
    gap = values["plus"] - values["minus"]
    scale = max(1.0, abs(values["plus"]), abs(values["minus"]))
    if abs(gap) <= tie_tol * scale:
        winner = "tie"
    else:
        winner = "plus" if gap < 0 else "minus"
    return GSignReport(values["plus"], values["minus"], winner)
