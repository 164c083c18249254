"""Adaptive-weight multi-class SVM head on a flexible Stiefel manifold.

The head scores a sample with ``W.T @ x + b`` (one score per class, labels
in {-1, +1}) and is fitted by block-coordinate closed forms:

* per-sample weights ``alpha`` on the probability simplex, from the sorted
  losses with a self-tuned ``gamma``;
* ``W`` under the constraint ``W.T (X D_hat X.T + lam I) W = I_c``, via the
  matrix square root of the constraint matrix and an orthogonal Procrustes
  step;
* ``b`` as the alpha-weighted mean residual;
* slack ``M`` by clipping the margin excess at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, ManifoldInfeasibleError, ShapeError
from .numerics import as_matrix, spd_inverse, spd_sqrt, svd, weighted_scatter

GAMMA_FLOOR = 1e-12


@dataclass
class DecisionState:
    W: np.ndarray  # d x c
    b: np.ndarray  # c
    alpha: np.ndarray  # n, on the simplex
    M: np.ndarray  # c x n, non-negative
    lam: float
    gamma: float  # value in effect for the last alpha update
    gamma_fixed: float | None = None  # None: self-tuned
    # (objective after the (W, b) step, objective after the M step) per inner pass
    history: list[tuple[float, float]] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return self.W.shape[1]


def onehot_to_pm(Y) -> np.ndarray:
    """Map a one-hot matrix to {-1, +1} labels."""
    return 2.0 * np.asarray(Y, dtype=np.float64) - 1.0


def check_pm_labels(Ypm) -> np.ndarray:
    Ypm = as_matrix(Ypm, "Ypm")
    if not np.all(np.abs(Ypm) == 1.0) or not np.all((Ypm == 1.0).sum(axis=0) == 1):
        raise InvalidInputError("labels must be +-1 with exactly one +1 per column")
    return Ypm


def scores(W, b, X) -> np.ndarray:
    return W.T @ X + b[:, None]


def sample_losses(W, b, M, X, Ypm) -> np.ndarray:
    """``f_i = ||W^T x_i + b - y_i - y_i * m_i||^2`` for every sample."""
    R = scores(W, b, X) - Ypm - Ypm * M
    return np.sum(R * R, axis=0)


def decision_objective(W, b, M, alpha, gamma, lam, X, Ypm) -> float:
    """``sum_i alpha_i f_i + lam ||W||_F^2 + gamma ||alpha||^2``."""
    f = sample_losses(W, b, M, X, Ypm)
    return float(alpha @ f + lam * np.sum(W * W) + gamma * (alpha @ alpha))


def update_alpha(f) -> tuple[np.ndarray, float]:
    """Closed-form weights with the self-tuned ``gamma``.

    ``gamma = (n-1)/2 f_max - 1/2 (sum of the other n-1 losses)`` is the
    largest value for which only the worst sample gets zero weight; then
    ``alpha_i = (f_max - f_i) / (2 gamma)``. Equal losses fall back to
    uniform weights.
    """
    f = np.asarray(f, dtype=np.float64).ravel()
    n = f.size
    if n < 2:
        raise InvalidInputError("at least two samples are required")
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise InvalidInputError("losses must be finite and non-negative")
    fs = f[np.argsort(f, kind="stable")]
    gamma = 0.5 * (n - 1) * fs[-1] - 0.5 * fs[:-1].sum()
    if gamma <= GAMMA_FLOOR:
        return np.full(n, 1.0 / n), 0.0
    alpha = np.maximum(fs[-1] - f, 0.0) / (2.0 * gamma)
    return alpha, float(gamma)


def alpha_fixed_gamma(f, gamma: float) -> np.ndarray:
    """Weights for a user-fixed ``gamma``: Euclidean projection of ``-f/(2 gamma)``
    onto the simplex, by Michelot's active-set iteration."""
    if not gamma > 0:
        raise InvalidConfigError(f"gamma must be > 0, got {gamma}")
    v = -np.asarray(f, dtype=np.float64).ravel() / (2.0 * gamma)
    active = np.ones(v.size, dtype=bool)
    while True:
        tau = (1.0 - v[active].sum()) / active.sum()
        drop = active & (v + tau <= 0)
        if not drop.any():
            break
        active &= ~drop
    return np.where(active, v + tau, 0.0)


def update_weights_bias(X, G, alpha, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Constrained weighted least squares for ``W`` and ``b`` with ``alpha`` fixed.

    With ``A = X D_hat X^T + lam I`` and ``S = A^(1/2)``, the problem reduces to
    maximising ``tr(Q^T S^-1 X D_hat G^T)`` over orthonormal-column ``Q = S W``,
    solved by the SVD of ``S^-1 X D_hat G^T``.
    """
    if not lam > 0:
        raise InvalidConfigError(f"lambda must be > 0, got {lam}")
    X = as_matrix(X, "X")
    G = as_matrix(G, "G")
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    d, n = X.shape
    c = G.shape[0]
    if G.shape[1] != n or alpha.size != n:
        raise ShapeError(f"X, G and alpha disagree on the sample count ({n}, {G.shape[1]}, {alpha.size})")
    if d < c:
        raise ManifoldInfeasibleError(f"feature dimension {d} < class count {c}")
    A = weighted_scatter(X, alpha) + lam * np.eye(d)
    S_inv = spd_inverse(spd_sqrt(A))
    U, _, V = svd(S_inv @ weighted_scatter(X, alpha, G))
    W = S_inv @ U[:, :c] @ V.T
    b = (G @ alpha - W.T @ (X @ alpha)) / alpha.sum()
    return W, b


def update_slack(W, b, X, Ypm) -> np.ndarray:
    """``m_ij = max(y_ij * score_ij - 1, 0)``."""
    return np.maximum(Ypm * scores(W, b, X) - 1.0, 0.0)


def slack_target(Ypm, M, g_sign: int = 1) -> np.ndarray:
    """Regression target ``Y + g_sign * Y * M`` of the (W, b) step."""
    return Ypm + g_sign * (Ypm * M)


def fit_decision_layer(
    X,
    Ypm,
    lam: float = 0.5,
    gamma: float | None = None,
    inner_iters: int = 5,
    adaptive: bool = True,
    g_sign: int = 1,
) -> DecisionState:
    """Alternate alpha, (W, b) and M updates ``inner_iters`` times.

    ``gamma=None`` uses the self-tuned closed form for alpha; a number fixes
    gamma and projects onto the simplex instead. ``adaptive=False`` freezes
    alpha at uniform weights (plain manifold SVM head).
    """
    X = as_matrix(X, "X")
    Ypm = check_pm_labels(Ypm)
    if X.shape[1] != Ypm.shape[1]:
        raise ShapeError(f"X has {X.shape[1]} samples, labels have {Ypm.shape[1]}")
    if inner_iters < 1:
        raise InvalidConfigError("inner_iters must be >= 1")
    if g_sign not in (1, -1):
        raise InvalidConfigError("g_sign must be +1 or -1")
    if gamma is not None and not gamma > 0:
        raise InvalidConfigError(f"gamma must be > 0, got {gamma}")
    n = X.shape[1]
    alpha = np.full(n, 1.0 / n)
    M = np.zeros_like(Ypm)
    gam = 0.0 if gamma is None or not adaptive else float(gamma)
    W, b = update_weights_bias(X, slack_target(Ypm, M, g_sign), alpha, lam)
    history = []
    for _ in range(inner_iters):
        if adaptive:
            f = sample_losses(W, b, M, X, Ypm)
            if gamma is None:
                alpha, gam = update_alpha(f)
            else:
                alpha = alpha_fixed_gamma(f, gamma)
        W, b = update_weights_bias(X, slack_target(Ypm, M, g_sign), alpha, lam)
        obj_wb = decision_objective(W, b, M, alpha, gam, lam, X, Ypm)
        M = update_slack(W, b, X, Ypm)
        obj_m = decision_objective(W, b, M, alpha, gam, lam, X, Ypm)
        history.append((obj_wb, obj_m))
    return DecisionState(W, b, alpha, M, lam, gam, gamma, history)


def decision_scores(state: DecisionState, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != state.W.shape[0]:
        raise ShapeError(f"head expects {state.W.shape[0]} feature rows, got shape {np.shape(X)}")
    return scores(state.W, state.b, X)


def predict_decision(state: DecisionState, X) -> np.ndarray:
    return np.argmax(decision_scores(state, X), axis=0)
