"""Evaluation protocols built on the trainers: lambda sweeps and the ablation ladder."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data_eval import Dataset, accuracy, macro_f1, split
from .manifold_net import ModelConfig, predict, train
from .ridge_net import RidgeConfig, predict_ridge, train_ridge_network

LAMBDA_GRID = tuple(2.0**k for k in range(-3, 4))
ABLATION_VARIANTS = ("RidgeR-NN", "RidgeR-SVM-NN", "RidgeR-SVM-AW-NN")


@dataclass
class RunResult:
    name: str
    lam: float
    seed: int
    iterations: int
    train_acc: float
    test_acc: float
    test_f1: float


def fit_and_score(train_ds: Dataset, test_ds: Dataset, config: ModelConfig, name: str = "model") -> RunResult:
    model = train(train_ds.X, train_ds.Y_onehot, config)
    pred = predict(model, test_ds.X)
    return RunResult(
        name,
        config.lam,
        config.seed,
        len(model.trace),
        model.trace[-1][1],
        accuracy(pred, test_ds.labels),
        macro_f1(pred, test_ds.labels, test_ds.c),
    )


def fit_ridge_and_score(train_ds: Dataset, test_ds: Dataset, config: ModelConfig) -> RunResult:
    """Ridge-only stack with a final layer of width c, classified by argmax."""
    rcfg = RidgeConfig(
        config.lam,
        (*config.widths, train_ds.c),
        config.activation,
        config.target_space,
        config.center_backward,
        config.bottom_up_refit,
    )
    fit = train_ridge_network(
        train_ds.X, train_ds.Y_onehot, rcfg, config.max_iter, config.tol, config.seed
    )
    pred = predict_ridge(fit.layers, test_ds.X)
    return RunResult(
        ABLATION_VARIANTS[0],
        config.lam,
        config.seed,
        len(fit.losses),
        fit.train_accuracy[-1],
        accuracy(pred, test_ds.labels),
        macro_f1(pred, test_ds.labels, test_ds.c),
    )


def lambda_sweep(
    train_ds: Dataset, test_ds: Dataset, config: ModelConfig, grid=LAMBDA_GRID
) -> list[RunResult]:
    """Train once per lambda in ``grid`` (in order) and score on ``test_ds``."""
    return [
        fit_and_score(train_ds, test_ds, replace(config, lam=float(lam)), f"lambda={lam:g}")
        for lam in grid
    ]


def select_lambda(
    train_ds: Dataset,
    config: ModelConfig,
    grid=LAMBDA_GRID,
    val_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[float, list[RunResult]]:
    """Pick lambda by accuracy on a stratified hold-out of the training data.

    Ties go to the lambda listed first. Returns the choice and the
    per-lambda validation runs.
    """
    fit_part, val_part = split(train_ds, 1.0 - val_fraction, seed)
    runs = lambda_sweep(fit_part, val_part, config, grid)
    best = max(range(len(runs)), key=lambda i: (runs[i].test_acc, -i))
    return runs[best].lam, runs


def ablation(train_ds: Dataset, test_ds: Dataset, config: ModelConfig, seeds) -> list[RunResult]:
    """The three-step ladder per seed: ridge layers with an argmax readout,
    plus the manifold SVM head with uniform weights, plus adaptive weights."""
    out = []
    for seed in seeds:
        cfg = replace(config, seed=int(seed))
        out.append(fit_ridge_and_score(train_ds, test_ds, cfg))
        out.append(fit_and_score(train_ds, test_ds, replace(cfg, adaptive=False), ABLATION_VARIANTS[1]))
        out.append(fit_and_score(train_ds, test_ds, replace(cfg, adaptive=True), ABLATION_VARIANTS[2]))
    return out


def mean_accuracy(results: list[RunResult]) -> dict[str, float]:
    names = [r.name for r in results]
    order = list(dict.fromkeys(names))
    return {
        name: float(np.mean([r.test_acc for r in results if r.name == name])) for name in order
    }
