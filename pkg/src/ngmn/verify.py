"""Certification suite: every closed form checked against an oracle on random instances."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle
from .decision_layer import (
    decision_objective,
    scores,
    slack_target,
    update_alpha,
    update_slack,
    update_weights_bias,
)
from .numerics import spd_sqrt
from .ridge_net import bias_given_weights, fit_layer, layer_loss, ridge_weights


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float  # worst observed value of the checked quantity
    tolerance: float
    instances: int
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: worst={self.worst:.3e} tol={self.tolerance:.1e} "
            f"instances={self.instances} ({self.seconds:.2f}s)"
        )


def _ridge_instance(rng):
    d_in = int(rng.integers(1, 11))
    d_out = int(rng.integers(1, 11))
    n = int(rng.integers(2, 41))
    H = rng.normal(size=(d_in, n))
    T = rng.normal(size=(d_out, n))
    lam = float(2.0 ** rng.uniform(-3, 3))
    return H, T, lam


def _scale(value: float) -> float:
    return max(1.0, abs(value))


def check_bias_stationarity(n_instances: int = 100, seed: int = 0) -> CheckResult:
    """Optimal bias for a fixed random ``W``: gradient over ``b`` vanishes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        H, T, lam = _ridge_instance(rng)
        W = rng.normal(size=(H.shape[0], T.shape[0]))
        b = bias_given_weights(W, H, T)

        def obj(x):
            return layer_loss(W, x, H, T, lam)

        g = oracle.fd_stationarity(obj, b)
        worst = max(worst, g / _scale(obj(b)))
    return CheckResult("bias_stationarity", worst <= 1e-6, worst, 1e-6, n_instances)


def check_ridge_stationarity(n_instances: int = 100, seed: int = 1) -> CheckResult:
    """Ridge weights without a bias: gradient over ``W`` vanishes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        X, Y, lam = _ridge_instance(rng)
        W = ridge_weights(X, Y, lam)

        def obj(x):
            V = x.reshape(W.shape)
            R = V.T @ X - Y
            return float(np.sum(R * R) + lam * np.sum(V * V))

        g = oracle.fd_stationarity(obj, W)
        worst = max(worst, g / _scale(obj(W.ravel())))
    return CheckResult("ridge_weight_stationarity", worst <= 1e-6, worst, 1e-6, n_instances)


def check_fit_layer(n_instances: int = 100, seed: int = 2) -> CheckResult:
    """Joint ``(W, b)`` from :func:`fit_layer`: gradient over both vanishes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        H, T, lam = _ridge_instance(rng)
        W, b = fit_layer(H, T, lam)
        k = W.size

        def obj(x):
            return layer_loss(x[:k].reshape(W.shape), x[k:], H, T, lam)

        x0 = np.concatenate([W.ravel(), b])
        g = oracle.fd_stationarity(obj, x0)
        worst = max(worst, g / _scale(obj(x0)))
    return CheckResult("fit_layer_stationarity", worst <= 1e-6, worst, 1e-6, n_instances)


def check_alpha_projection(n_instances: int = 100, seed: int = 3) -> CheckResult:
    """Self-tuned weights equal the simplex projection of ``-f / (2 gamma)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(2, 60))
        f = rng.exponential(size=n) * 10.0 ** rng.uniform(-2, 2)
        alpha, gamma = update_alpha(f)
        if gamma <= 0:
            continue
        ref = oracle.simplex_projection(-f / (2.0 * gamma))
        worst = max(worst, float(np.max(np.abs(alpha - ref))))
    return CheckResult("alpha_equals_simplex_projection", worst <= 1e-10, worst, 1e-10, n_instances)


def _head_instance(rng, n_max: int = 30):
    c = int(rng.integers(1, 5))
    d = int(rng.integers(c, c + 6))
    n = int(rng.integers(max(c + 1, 4), n_max + 1))
    X = rng.normal(size=(d, n))
    labels = rng.integers(0, c, size=n)
    Ypm = -np.ones((c, n))
    Ypm[labels, np.arange(n)] = 1.0
    alpha = rng.dirichlet(np.ones(n))
    lam = float(2.0 ** rng.uniform(-3, 3))
    return X, Ypm, alpha, lam


def check_manifold(n_instances: int = 50, n_points: int = 1000, seed: int = 4) -> list[CheckResult]:
    """Constraint ``W^T A W = I`` and trace dominance over random feasible points."""
    rng = np.random.default_rng(seed)
    worst_c = 0.0
    worst_d = -np.inf  # largest amount by which a random point beats the closed form
    for i in range(n_instances):
        X, Ypm, alpha, lam = _head_instance(rng)
        M = np.maximum(rng.normal(size=Ypm.shape), 0.0)
        G = slack_target(Ypm, M)
        W, _ = update_weights_bias(X, G, alpha, lam)
        A = oracle.constraint_matrix(X, alpha, lam)
        c = G.shape[0]
        worst_c = max(worst_c, float(np.max(np.abs(W.T @ A @ W - np.eye(c)))))
        best = oracle.trace_objective(W, X, G, alpha)
        S = spd_sqrt(0.5 * (A + A.T))
        for P in oracle.random_feasible_manifold_points(S, n_points, c, seed=1000 + i):
            worst_d = max(worst_d, oracle.trace_objective(P, X, G, alpha) - best)
    return [
        CheckResult("manifold_constraint", worst_c <= 1e-6, worst_c, 1e-6, n_instances),
        CheckResult(
            "procrustes_dominance", worst_d <= 1e-9, worst_d, 1e-9, n_instances * n_points
        ),
    ]


def check_slack_kkt(n_instances: int = 100, seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        X, Ypm, _, _ = _head_instance(rng)
        W = rng.normal(size=(X.shape[0], Ypm.shape[0])) * 2.0
        b = rng.normal(size=Ypm.shape[0])
        M = update_slack(W, b, X, Ypm)
        worst = max(worst, oracle.slack_kkt_residual(M, Ypm, scores(W, b, X)))
    return CheckResult("slack_kkt", worst <= 1e-10, worst, 1e-10, n_instances)


def check_block_monotonicity(n_instances: int = 50, seed: int = 6) -> CheckResult:
    """With alpha and gamma frozen, a (W, b) step then an M step never raises the objective.

    Each instance starts from a feasible ``W`` (fitted with the same alpha)
    and a random non-negative slack, so both steps have work to do.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf  # largest increase seen
    for _ in range(n_instances):
        X, Ypm, alpha, lam = _head_instance(rng)
        gamma = float(rng.uniform(0.0, 2.0))
        W, b = update_weights_bias(X, rng.normal(size=Ypm.shape), alpha, lam)
        M = np.maximum(rng.normal(size=Ypm.shape), 0.0)
        before = decision_objective(W, b, M, alpha, gamma, lam, X, Ypm)
        W, b = update_weights_bias(X, slack_target(Ypm, M), alpha, lam)
        mid = decision_objective(W, b, M, alpha, gamma, lam, X, Ypm)
        M = update_slack(W, b, X, Ypm)
        after = decision_objective(W, b, M, alpha, gamma, lam, X, Ypm)
        worst = max(worst, mid - before, after - mid)
    return CheckResult("block_monotonicity", worst <= 1e-9, worst, 1e-9, n_instances)


def check_g_sign(n_instances: int = 20, seed: int = 7) -> CheckResult:
    """The implemented slack sign reaches the lower weighted objective.

    ``worst`` is the largest (plus - minus) objective gap; the check also
    requires a strict winner on every instance.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    strict = True
    for _ in range(n_instances):
        X, Ypm, alpha, lam = _head_instance(rng, n_max=50)
        M = np.maximum(rng.normal(size=Ypm.shape), 0.0) + 0.1 * (rng.uniform(size=Ypm.shape) < 0.5)
        report = oracle.g_sign_probe(X, Ypm, alpha, lam, M)
        worst = max(worst, report.objective_plus - report.objective_minus)
        strict &= report.winner == "plus"
    return CheckResult("g_sign_probe", strict and worst <= 0.0, worst, 0.0, n_instances)


def _timed(fn: Callable[[], CheckResult | list[CheckResult]]) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = fn()
    out = out if isinstance(out, list) else [out]
    elapsed = time.perf_counter() - t0
    for r in out:
        r.seconds = elapsed / len(out)
    return out


def run_all() -> list[CheckResult]:
    """Run every certification check at its full instance count."""
    results: list[CheckResult] = []
    for fn in (
        check_bias_stationarity,
        check_ridge_stationarity,
        check_fit_layer,
        check_alpha_projection,
        check_manifold,
        check_slack_kkt,
        check_block_monotonicity,
        check_g_sign,
    ):
        results.extend(_timed(fn))
    return results

