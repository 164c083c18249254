"""Ridge-regression layers trained without gradients.

A layer computes ``H = act(W.T @ H_prev + b 1^T)``. Given a target for its
output, ``W`` and ``b`` are refitted in closed form by ridge regression in
pre-activation space. Label information is pushed down the stack with the
rank-limited back-substitution ``W (T - b 1^T)`` followed by a column
softmax, which becomes the target of the layer below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, softmax_columns
from .errors import InvalidConfigError, InvalidInputError, ShapeError
from .numerics import as_matrix, spd_inverse

TARGET_SPACES = ("inverse", "direct")


@dataclass
class LayerParams:
    W: np.ndarray  # d_in x d_out
    b: np.ndarray  # d_out
    activation: Activation

    @property
    def d_in(self) -> int:
        return self.W.shape[0]

    @property
    def d_out(self) -> int:
        return self.W.shape[1]


@dataclass
class RidgeConfig:
    """Hyper-parameters of the ridge layers.

    ``target_space="inverse"`` regresses every layer onto
    ``act.inverse(target)``; ``"direct"`` regresses onto the target itself.

    ``center_backward`` removes the per-unit sample mean of the
    back-substituted matrix before the softmax (see :func:`backward_labels`).
    ``bottom_up_refit`` adds a second pass after the top-down sweep that refits
    every layer, lowest first, on the features produced by the freshly refitted
    layers below it, against the same targets.
    """

    lam: float = 0.5
    widths: tuple[int, ...] = (10, 8)
    activation: Activation = field(default_factory=Activation)
    target_space: str = "inverse"
    center_backward: bool = True
    bottom_up_refit: bool = True

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if not self.lam > 0:
            raise InvalidConfigError(f"lambda must be > 0, got {self.lam}")
        if len(self.widths) == 0:
            raise InvalidInputError("at least one layer width is required")
        if any(w < 1 for w in self.widths):
            raise InvalidInputError(f"layer widths must be positive, got {self.widths}")
        if self.target_space not in TARGET_SPACES:
            raise InvalidConfigError(f"target_space must be one of {TARGET_SPACES}")


@dataclass
class RidgeFit:
    layers: list[LayerParams]
    losses: list[float]
    train_accuracy: list[float]


def forward_layer(params: LayerParams, H_prev) -> np.ndarray:
    H_prev = np.asarray(H_prev, dtype=np.float64)
    if H_prev.ndim != 2 or H_prev.shape[0] != params.d_in:
        raise ShapeError(
            f"layer expects {params.d_in} input rows, got shape {np.shape(H_prev)}"
        )
    return params.activation(params.W.T @ H_prev + params.b[:, None])


def forward(layers: list[LayerParams], X) -> list[np.ndarray]:
    """All activations ``[X, H1, ..., Ht]`` of a layer stack."""
    Hs = [np.asarray(X, dtype=np.float64)]
    for layer in layers:
        Hs.append(forward_layer(layer, Hs[-1]))
    return Hs


def layer_loss(W, b, H_prev, T, lam: float) -> float:
    """``||W^T H + b 1^T - T||_F^2 + lam ||W||_F^2``."""
    R = W.T @ H_prev + b[:, None] - T
    return float(np.sum(R * R) + lam * np.sum(W * W))


def ridge_weights(X, Y, lam: float) -> np.ndarray:
    """``W = (X X^T + lam I)^-1 X Y^T``, the minimiser of ``||W^T X - Y||^2 + lam ||W||^2``."""
    if not lam > 0:
        raise InvalidConfigError(f"lambda must be > 0, got {lam}")
    A = X @ X.T + lam * np.eye(X.shape[0])
    return spd_inverse(A) @ (X @ Y.T)


def bias_given_weights(W, H_prev, T) -> np.ndarray:
    """``b = (T - W^T H_prev) 1 / n``, the optimal bias for fixed ``W``."""
    return (T - W.T @ H_prev).sum(axis=1) / H_prev.shape[1]


def fit_layer(H_prev, T, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form minimiser ``(W, b)`` of :func:`layer_loss`.

    The bias is eliminated by centering both sides, ``W`` is the ridge
    solution on the centered data and ``b`` the mean residual.
    """
    if not lam > 0:
        raise InvalidConfigError(f"lambda must be > 0, got {lam}")
    H_prev = as_matrix(H_prev, "H_prev")
    T = as_matrix(T, "T")
    if H_prev.shape[1] != T.shape[1]:
        raise ShapeError(f"H_prev has {H_prev.shape[1]} samples, T has {T.shape[1]}")
    # right-multiplication by the centering matrix, without forming it
    Xc = H_prev - H_prev.mean(axis=1, keepdims=True)
    Tc = T - T.mean(axis=1, keepdims=True)
    W = ridge_weights(Xc, Tc, lam)
    return W, bias_given_weights(W, H_prev, T)


def backward_labels(params: LayerParams, Y_tilde, center: bool = False) -> np.ndarray:
    """Back-substitute a layer target into its input space, mapped into (0, 1).

    Computes ``softmax(W (Y_tilde - b 1^T))`` column by column. With
    ``center=True`` each row of ``W (Y_tilde - b 1^T)`` has its mean over the
    samples removed first. That equals ``W (Y_tilde - mean(Y_tilde))``, the
    back-substitution done in the centered coordinates the layer was fitted
    in, and drops the sample-independent term ``W W^T mean(H_prev)``. Left in,
    that term can be large enough to make the softmax pick the same unit for
    every sample, after which the layer below receives a constant target.
    """
    Y_tilde = np.asarray(Y_tilde, dtype=np.float64)
    if Y_tilde.ndim != 2 or Y_tilde.shape[0] != params.d_out:
        raise ShapeError(
            f"target must have {params.d_out} rows, got shape {np.shape(Y_tilde)}"
        )
    Hbar = params.W @ (Y_tilde - params.b[:, None])
    if center:
        Hbar = Hbar - Hbar.mean(axis=1, keepdims=True)
    return softmax_columns(Hbar)


def layer_target(act: Activation, Y_tilde: np.ndarray, target_space: str) -> np.ndarray:
    if target_space == "inverse":
        return act.inverse(Y_tilde)
    return Y_tilde


def init_layers(dims, activation: Activation, rng: np.random.Generator) -> list[LayerParams]:
    """Glorot-uniform weights and zero biases for ``dims = [d0, d1, ..., dt]``."""
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        s = np.sqrt(6.0 / (d_in + d_out))
        W = rng.uniform(-s, s, size=(d_in, d_out))
        layers.append(LayerParams(W, np.zeros(d_out), activation))
    return layers


def refit_layers(
    layers: list[LayerParams],
    Hs: list[np.ndarray],
    Y_top: np.ndarray,
    config: RidgeConfig,
) -> tuple[list[LayerParams], float]:
    """One top-down sweep: fit each layer to its target, then push the target down.

    ``Hs`` are the forward activations computed with the current ``layers``;
    ``Y_top`` is the target for the output of ``layers[-1]``. Returns the new
    layers and the summed per-layer loss at the fitted parameters (of the
    bottom-up pass when ``config.bottom_up_refit`` is set).
    """
    new_layers = list(layers)
    targets: list[np.ndarray] = [np.empty(0)] * len(layers)
    Y_tilde = Y_top
    total = 0.0
    for l in range(len(layers) - 1, -1, -1):
        act = layers[l].activation
        T = layer_target(act, Y_tilde, config.target_space)
        targets[l] = T
        W, b = fit_layer(Hs[l], T, config.lam)
        new_layers[l] = LayerParams(W, b, act)
        total += layer_loss(W, b, Hs[l], T, config.lam)
        if l > 0:
            Y_tilde = backward_labels(new_layers[l], T, center=config.center_backward)
    if not config.bottom_up_refit:
        return new_layers, total

    total = 0.0
    H = Hs[0]
    for l, T in enumerate(targets):
        W, b = fit_layer(H, T, config.lam)
        new_layers[l] = LayerParams(W, b, layers[l].activation)
        total += layer_loss(W, b, H, T, config.lam)
        H = forward_layer(new_layers[l], H)
    return new_layers, total


def check_onehot(Y) -> np.ndarray:
    Y = as_matrix(Y, "Y")
    if not np.all((Y == 0) | (Y == 1)) or not np.all(Y.sum(axis=0) == 1):
        raise InvalidInputError("Y must be one-hot (a single 1 per column)")
    if Y.shape[0] < 2:
        raise InvalidInputError("at least two classes are required")
    return Y


def relative_change(prev: float, cur: float) -> float:
    return abs(cur - prev) / max(abs(prev), np.finfo(float).tiny)


def train_ridge_network(
    X,
    Y,
    config: RidgeConfig,
    max_iter: int = 30,
    tol: float = 1e-4,
    seed: int = 0,
) -> RidgeFit:
    """Stack of ridge layers whose last width equals the class count.

    Each iteration runs a forward pass, fixes the top target to the one-hot
    labels and refits every layer top-down. Stops when the relative change of
    the summed layer loss drops below ``tol`` or after ``max_iter`` sweeps.
    """
    X = as_matrix(X, "X")
    Y = check_onehot(Y)
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"X has {X.shape[1]} samples, Y has {Y.shape[1]}")
    if config.widths[-1] != Y.shape[0]:
        raise InvalidInputError(
            f"last width {config.widths[-1]} must equal the class count {Y.shape[0]}"
        )
    if max_iter < 1:
        raise InvalidConfigError("max_iter must be >= 1")
    rng = np.random.default_rng(seed)
    layers = init_layers([X.shape[0], *config.widths], config.activation, rng)
    truth = Y.argmax(axis=0)
    losses: list[float] = []
    accs: list[float] = []
    for _ in range(max_iter):
        Hs = forward(layers, X)
        layers, loss = refit_layers(layers, Hs, Y, config)
        losses.append(loss)
        accs.append(float(np.mean(predict_ridge(layers, X) == truth)))
        if len(losses) > 1 and relative_change(losses[-2], losses[-1]) < tol:
            break
    return RidgeFit(layers, losses, accs)


def predict_ridge(layers: list[LayerParams], X) -> np.ndarray:
    """Argmax of the top-layer output; ties go to the lowest class index."""
    return np.argmax(forward(layers, X)[-1], axis=0)
