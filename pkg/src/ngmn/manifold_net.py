"""Ridge feature layers topped by the manifold SVM head, trained jointly.

Training alternates closed-form blocks: forward pass, head fit on the top
features, then a top-down refit of the ridge layers against targets pushed
back from the head.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, softmax_columns
from .decision_layer import DecisionState, fit_decision_layer, onehot_to_pm, predict_decision, slack_target
from .activations import KINDS
from .errors import (
    BadMagicError,
    InvalidConfigError,
    InvalidInputError,
    ModelFormatError,
    ShapeError,
    TruncatedModelError,
    VersionMismatchError,
)
from .numerics import as_matrix
from .ridge_net import (
    TARGET_SPACES,
    LayerParams,
    RidgeConfig,
    check_onehot,
    forward,
    init_layers,
    refit_layers,
    relative_change,
)

TOP_TARGETS = ("slack", "labels")


@dataclass
class ModelConfig:
    """Everything needed to reproduce a training run.

    ``gamma=None`` selects the self-tuned weight trade-off. ``adaptive=False``
    keeps the head's sample weights uniform. ``top_target`` picks what the
    head hands down to the ridge layers: the slack-adjusted target it was
    fitted to (``"slack"``) or the raw +-1 labels (``"labels"``).
    """

    widths: tuple[int, ...] = (10, 8)
    lam: float = 0.5
    activation: Activation = field(default_factory=Activation)
    gamma: float | None = None
    adaptive: bool = True
    inner_iters: int = 5
    max_iter: int = 30
    tol: float = 1e-4
    target_space: str = "inverse"
    top_target: str = "slack"
    center_backward: bool = True
    bottom_up_refit: bool = True
    seed: int = 0

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if self.max_iter < 1 or self.inner_iters < 1:
            raise InvalidConfigError("max_iter and inner_iters must be >= 1")
        if self.gamma is not None and not self.gamma > 0:
            raise InvalidConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.top_target not in TOP_TARGETS:
            raise InvalidConfigError(f"top_target must be one of {TOP_TARGETS}")
        if not self.tol >= 0:
            raise InvalidConfigError("tol must be >= 0")
        self.ridge_config()  # validates lam, widths and target_space

    def ridge_config(self) -> RidgeConfig:
        return RidgeConfig(
            self.lam,
            self.widths,
            self.activation,
            self.target_space,
            self.center_backward,
            self.bottom_up_refit,
        )


@dataclass
class NetworkModel:
    layers: list[LayerParams]
    head: DecisionState
    config: ModelConfig
    # (loss, train accuracy) per outer iteration
    trace: list[tuple[float, float]] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.layers[0].d_in

    @property
    def n_classes(self) -> int:
        return self.head.n_classes


def _fit_head(H, Ypm, config: ModelConfig) -> DecisionState:
    return fit_decision_layer(
        H,
        Ypm,
        lam=config.lam,
        gamma=config.gamma,
        inner_iters=config.inner_iters,
        adaptive=config.adaptive,
    )


def head_backward_target(
    head: DecisionState, Ypm, top_target: str = "slack", center: bool = True
) -> np.ndarray:
    """Target for the last ridge layer, back-substituted through the head.

    Same map as :func:`ridge_net.backward_labels` with the head's ``W`` and
    ``b`` in place of a ridge layer's.
    """
    Y_top = slack_target(Ypm, head.M) if top_target == "slack" else Ypm
    Hbar = head.W @ (Y_top - head.b[:, None])
    if center:
        Hbar = Hbar - Hbar.mean(axis=1, keepdims=True)
    return softmax_columns(Hbar)


def train(X, Y, config: ModelConfig | None = None, seed: int | None = None) -> NetworkModel:
    """Fit a manifold network on features ``X`` (d x n) and one-hot ``Y`` (c x n).

    The returned head is always fitted on the features of the returned
    layers. The recorded loss is the joint objective evaluated right after the
    forward pass: the forward residual ``||H - act(W^T H_prev + b 1^T)||^2``
    is zero there by construction, which leaves the head's weighted objective
    on the current features. Stops when its relative change falls below
    ``config.tol`` or after ``config.max_iter`` outer iterations.
    """
    config = config or ModelConfig()
    if seed is not None:
        config = ModelConfig(**{**config.__dict__, "seed": int(seed)})
    X = as_matrix(X, "X")
    Y = check_onehot(Y)
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"X has {X.shape[1]} samples, Y has {Y.shape[1]}")
    c = Y.shape[0]
    if config.widths[-1] < c:
        raise InvalidInputError(
            f"last hidden width {config.widths[-1]} is smaller than the class count {c}"
        )
    Ypm = onehot_to_pm(Y)
    truth = Y.argmax(axis=0)
    ridge_cfg = config.ridge_config()
    rng = np.random.default_rng(config.seed)
    layers = init_layers([X.shape[0], *config.widths], config.activation, rng)

    Hs = forward(layers, X)
    head = _fit_head(Hs[-1], Ypm, config)
    trace: list[tuple[float, float]] = []
    for _ in range(config.max_iter):
        Y_top = head_backward_target(head, Ypm, config.top_target, config.center_backward)
        layers, _ = refit_layers(layers, Hs, Y_top, ridge_cfg)
        Hs = forward(layers, X)
        head = _fit_head(Hs[-1], Ypm, config)
        loss = head.history[-1][1]
        acc = float(np.mean(predict_decision(head, Hs[-1]) == truth))
        trace.append((loss, acc))
        if len(trace) > 1 and relative_change(trace[-2][0], loss) < config.tol:
            break
    return NetworkModel(layers, head, config, trace)


def features(model: NetworkModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != model.n_features:
        raise ShapeError(
            f"model expects {model.n_features} features, got input of shape {np.shape(X)}"
        )
    return forward(model.layers, X)[-1]


def predict(model: NetworkModel, X) -> np.ndarray:
    """Class index per column of ``X``; ties go to the lowest index."""
    return predict_decision(model.head, features(model, X))


# ---------------------------------------------------------------- persistence
#
# Layout (all integers and floats little-endian):
#   b"NGMN", u16 version
#   config: u32 layer count, u32 widths..., u8 activation id, f64 slope, f64 eps,
#           f64 lambda, u8 gamma mode (0 self-tuned, 1 fixed), f64 gamma,
#           u8 adaptive, u32 inner_iters, u32 max_iter, f64 tol,
#           u8 target space, u8 top target, u8 center_backward,
#           u8 bottom_up_refit, i64 seed
#   every matrix: u32 rows, u32 cols, rows*cols f64 in row-major order
#   ridge layers in order: W (d_in x d_out), b (d_out x 1)
#   head: W (d x c), b (c x 1), alpha (n x 1), M (c x n), f64 gamma in effect
#   trace (k x 2: loss, train accuracy), head history (k x 2)

MAGIC = b"NGMN"
FORMAT_VERSION = 1


class _Writer:
    def __init__(self):
        self.buf = io.BytesIO()

    def pack(self, fmt: str, *values):
        self.buf.write(struct.pack("<" + fmt, *values))

    def matrix(self, A):
        A = np.asarray(A, dtype="<f8")
        if A.ndim == 1:
            A = A[:, None]
        self.pack("II", *A.shape)
        self.buf.write(np.ascontiguousarray(A).tobytes())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise TruncatedModelError(
                f"model file truncated: need {size} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def matrix(self) -> np.ndarray:
        rows, cols = self.unpack("II")
        raw = self.take(8 * rows * cols)
        return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).astype(np.float64)


def model_bytes(model: NetworkModel) -> bytes:
    cfg = model.config
    w = _Writer()
    w.buf.write(MAGIC)
    w.pack("H", FORMAT_VERSION)
    w.pack("I", len(cfg.widths))
    w.pack(f"{len(cfg.widths)}I", *cfg.widths)
    act = cfg.activation
    w.pack("Bdd", KINDS.index(act.kind), act.slope, act.eps)
    w.pack("d", cfg.lam)
    w.pack("Bd", 0 if cfg.gamma is None else 1, 0.0 if cfg.gamma is None else cfg.gamma)
    w.pack("BIId", int(cfg.adaptive), cfg.inner_iters, cfg.max_iter, cfg.tol)
    w.pack(
        "BBBB",
        TARGET_SPACES.index(cfg.target_space),
        TOP_TARGETS.index(cfg.top_target),
        int(cfg.center_backward),
        int(cfg.bottom_up_refit),
    )
    w.pack("q", cfg.seed)
    for layer in model.layers:
        w.matrix(layer.W)
        w.matrix(layer.b)
    head = model.head
    w.matrix(head.W)
    w.matrix(head.b)
    w.matrix(head.alpha)
    w.matrix(head.M)
    w.pack("d", head.gamma)
    w.matrix(np.array(model.trace, dtype=np.float64).reshape(-1, 2))
    w.matrix(np.array(head.history, dtype=np.float64).reshape(-1, 2))
    return w.buf.getvalue()


def model_from_bytes(data: bytes) -> NetworkModel:
    r = _Reader(data)
    magic = r.take(len(MAGIC)) if len(data) >= len(MAGIC) else data
    if magic != MAGIC:
        raise BadMagicError(f"not a model file: magic {magic!r}, expected {MAGIC!r}")
    (version,) = r.unpack("H")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, this build reads {FORMAT_VERSION}")
    (n_layers,) = r.unpack("I")
    widths = r.unpack(f"{n_layers}I")
    kind_id, slope, eps = r.unpack("Bdd")
    (lam,) = r.unpack("d")
    gamma_mode, gamma = r.unpack("Bd")
    adaptive, inner_iters, max_iter, tol = r.unpack("BIId")
    ts_id, tt_id, center, bottom_up = r.unpack("BBBB")
    (seed,) = r.unpack("q")
    try:
        config = ModelConfig(
            widths=widths,
            lam=lam,
            activation=Activation(KINDS[kind_id], slope, eps),
            gamma=gamma if gamma_mode == 1 else None,
            adaptive=bool(adaptive),
            inner_iters=inner_iters,
            max_iter=max_iter,
            tol=tol,
            target_space=TARGET_SPACES[ts_id],
            top_target=TOP_TARGETS[tt_id],
            center_backward=bool(center),
            bottom_up_refit=bool(bottom_up),
            seed=seed,
        )
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"invalid config block: {exc}") from exc
    layers = []
    for _ in range(n_layers):
        W = r.matrix()
        b = r.matrix()[:, 0]
        layers.append(LayerParams(W, b, config.activation))
    hW = r.matrix()
    hb = r.matrix()[:, 0]
    alpha = r.matrix()[:, 0]
    M = r.matrix()
    (head_gamma,) = r.unpack("d")
    trace = [(float(a), float(b)) for a, b in r.matrix()]
    history = [(float(a), float(b)) for a, b in r.matrix()]
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} trailing bytes after the model")
    dims = [layers[0].d_in] + [layer.d_out for layer in layers] if layers else []
    if any(layer.d_in != d for layer, d in zip(layers, dims)) or hW.shape[0] != dims[-1]:
        raise ModelFormatError("layer dimensions do not chain")
    head = DecisionState(hW, hb, alpha, M, lam, head_gamma, config.gamma, history)
    return NetworkModel(layers, head, config, trace)


def save_model(model: NetworkModel, sink) -> None:
    """Write ``model`` to a path or binary stream."""
    data = model_bytes(model)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def load_model(source) -> NetworkModel:
    """Read a model from a path, raw bytes or binary stream."""
    if isinstance(source, (bytes, bytearray)):
        return model_from_bytes(bytes(source))
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return model_from_bytes(fh.read())
    return model_from_bytes(source.read())
