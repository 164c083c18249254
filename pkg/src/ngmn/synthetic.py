"""Seeded synthetic benchmarks.

``blobs`` is the small Gaussian-cluster problem used for convergence and
ablation checks. ``waveform`` regenerates Breiman's three-class waveform
data (21 noisy features built from convex mixtures of shifted triangular
waves), whose class-conditional densities have a closed form, so the
Bayes-optimal classifier is available as a reference.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .data_eval import Dataset, normalize_rows

WAVE_DIM = 21
# (first, second) base wave of each class; a sample is u*first + (1-u)*second
WAVE_PAIRS = ((0, 1), (0, 2), (1, 2))


def blobs(
    seed: int = 0,
    n: int = 600,
    d: int = 10,
    c: int = 3,
    spread: float = 2.0,
    normalize: bool = True,
) -> Dataset:
    """Isotropic unit-variance Gaussian clusters around ``N(0, spread^2)`` centers.

    Samples are assigned to classes round-robin (``i % c``) so class sizes
    differ by at most one. Features are row-normalized to [0, 1] unless
    ``normalize=False``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(c, d))
    labels = np.arange(n) % c
    X = (centers[labels] + rng.normal(size=(n, d))).T
    ds = Dataset.from_labels(X, labels, c)
    return normalize_rows(ds) if normalize else ds


def base_waves() -> np.ndarray:
    """The three triangular base waves, shape (3, 21), peaks of height 6 at 6, 14 and 10."""
    i = np.arange(WAVE_DIM)
    h1 = np.maximum(6.0 - np.abs(i - 6), 0.0)
    h2 = np.maximum(6.0 - np.abs(i - 14), 0.0)
    h3 = np.maximum(6.0 - np.abs(i - 10), 0.0)
    return np.stack([h1, h2, h3])


def waveform(n: int = 2746, seed: int = 0, noise: float = 1.0) -> Dataset:
    """Breiman's waveform data: class ``k`` draws ``u ~ U(0, 1)`` and adds
    ``N(0, noise^2)`` to ``u * h_a + (1 - u) * h_b`` for its wave pair.

    Classes are drawn with equal probability. Features are raw (not
    normalized).
    """
    rng = np.random.default_rng(seed)
    h = base_waves()
    labels = rng.integers(0, 3, size=n)
    u = rng.uniform(size=n)
    first = np.array([p[0] for p in WAVE_PAIRS])[labels]
    second = np.array([p[1] for p in WAVE_PAIRS])[labels]
    clean = u[:, None] * h[first] + (1.0 - u[:, None]) * h[second]
    X = (clean + noise * rng.normal(size=(n, WAVE_DIM))).T
    return Dataset.from_labels(X, labels, 3)


def waveform_log_density(X, noise: float = 1.0) -> np.ndarray:
    """``log p(x | k)`` for every class (rows) and column of ``X`` (21 x n), up to
    a constant shared by all classes.

    For a pair (a, b) with ``v = a - b`` and ``r = x - b``, the density is a
    Gaussian integrated over the segment ``b + u v``, ``u in [0, 1]``:
    ``exp(-|r_perp|^2 / 2s^2) * (Phi(|v|(1 - u*)/s) - Phi(-|v| u*/s)) / |v|``
    with ``u* = r.v / |v|^2`` and ``r_perp`` the part of ``r`` orthogonal to ``v``.
    """
    X = np.asarray(X, dtype=np.float64)
    h = base_waves()
    out = np.empty((len(WAVE_PAIRS), X.shape[1]))
    for k, (a, b) in enumerate(WAVE_PAIRS):
        v = h[a] - h[b]
        vn = np.linalg.norm(v)
        R = X - h[b][:, None]
        proj = v @ R / vn  # length of r along v
        perp2 = np.sum(R * R, axis=0) - proj**2
        ustar = proj / vn
        hi = log_ndtr(vn * (1.0 - ustar) / noise)
        lo = log_ndtr(-vn * ustar / noise)
        # log(Phi(hi) - Phi(lo)) computed as hi + log1p(-exp(lo - hi))
        seg = hi + np.log1p(-np.exp(np.minimum(lo - hi, 0.0)) + 1e-300)
        out[k] = -0.5 * perp2 / noise**2 + seg - np.log(vn)
    return out


def waveform_bayes_predict(X, noise: float = 1.0) -> np.ndarray:
    """Bayes-optimal class under equal priors."""
    return np.argmax(waveform_log_density(X, noise), axis=0)


def waveform_posterior(X, noise: float = 1.0) -> np.ndarray:
    L = waveform_log_density(X, noise)
    return np.exp(L - logsumexp(L, axis=0, keepdims=True))
