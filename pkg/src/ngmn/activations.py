"""Invertible elementwise activations and the column softmax."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .errors import InvalidConfigError

KINDS = ("sigmoid", "leaky_relu", "tanh", "identity")


@dataclass(frozen=True)
class Activation:
    """A strictly monotone activation.

    ``eps`` is the distance kept from the open range boundary before
    inverting (sigmoid and tanh only); ``slope`` is the negative-side slope of
    the leaky ReLU.
    """

    kind: str = "sigmoid"
    slope: float = 0.1
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfigError(f"unknown activation {self.kind!r}; expected one of {KINDS}")
        if not 0.0 < self.slope < 1.0:
            raise InvalidConfigError("leaky ReLU slope must lie in (0, 1)")
        if not 0.0 < self.eps < 0.1:
            raise InvalidConfigError("clip epsilon must lie in (0, 0.1)")

    def __call__(self, Z):
        return apply(self, Z)

    def inverse(self, H):
        return invert(self, H)


def apply(act: Activation, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if act.kind == "sigmoid":
        return expit(Z)
    if act.kind == "tanh":
        return np.tanh(Z)
    if act.kind == "leaky_relu":
        return np.where(Z >= 0, Z, act.slope * Z)
    return Z.copy()


def invert(act: Activation, H) -> np.ndarray:
    """Elementwise inverse; bounded ranges are clipped by ``act.eps`` first."""
    H = np.asarray(H, dtype=np.float64)
    if act.kind == "sigmoid":
        return logit(np.clip(H, act.eps, 1.0 - act.eps))
    if act.kind == "tanh":
        return np.arctanh(np.clip(H, -1.0 + act.eps, 1.0 - act.eps))
    if act.kind == "leaky_relu":
        return np.where(H >= 0, H, H / act.slope)
    return H.copy()


def softmax_columns(Z) -> np.ndarray:
    """Softmax over rows, independently for every column (sample)."""
    Z = np.asarray(Z, dtype=np.float64)
    E = np.exp(Z - Z.max(axis=0, keepdims=True))
    return E / E.sum(axis=0, keepdims=True)
