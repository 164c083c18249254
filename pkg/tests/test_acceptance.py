"""Acceptance criteria, one test each, at the stated tolerances.

Every test appends a ``PASS``/``FAIL`` line to ``ACCEPTANCE_LINES``; the
hook in ``conftest.py`` prints them at the end of the session. Run just this
file with ``pytest tests/test_acceptance.py -v``.

MNIST is not bundled. Point ``NGMN_MNIST_DIR`` at a directory containing
``train-images-idx3-ubyte`` and ``train-labels-idx1-ubyte`` (optionally
``.gz``) to run criterion 4; without it that criterion fails.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from ngmn import verify
from ngmn.cli import main as cli_main
from ngmn.data_eval import accuracy, load_idx, normalize_rows, split
from ngmn.experiments import ABLATION_VARIANTS, ablation, fit_and_score, mean_accuracy, select_lambda
from ngmn.decision_layer import decision_scores
from ngmn.manifold_net import ModelConfig, features, load_model, model_bytes, predict, train
from ngmn.oracle import ridge_classifier_oracle
from ngmn.ridge_net import relative_change
from ngmn.synthetic import blobs, waveform, waveform_bayes_predict

ACCEPTANCE_LINES: list[str] = []


def record(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")


def test_c1_closed_form_certification():
    t0 = time.perf_counter()
    results = verify.run_all()
    elapsed = time.perf_counter() - t0
    failed = [r.name for r in results if not r.passed]
    ok = not failed and elapsed <= 60.0
    record(
        "criterion 1 closed-form certification",
        ok,
        f"{len(results) - len(failed)}/{len(results)} checks, {elapsed:.1f}s (limit 60s)"
        + (f", failed: {', '.join(failed)}" if failed else ""),
    )
    assert ok, [r.line() for r in results]


def test_c2_convergence_speed():
    ds = blobs(seed=0)
    t0 = time.perf_counter()
    model = train(ds.X, ds.Y_onehot, ModelConfig(widths=(10, 8), max_iter=10, tol=1e-3, seed=0))
    elapsed = time.perf_counter() - t0
    losses = [loss for loss, _ in model.trace]
    changes = [relative_change(a, b) for a, b in zip(losses, losses[1:])]
    converged_at = next((i + 2 for i, ch in enumerate(changes) if ch < 1e-3), None)
    acc = model.trace[-1][1]
    ok = converged_at is not None and converged_at <= 10 and acc >= 0.95 and elapsed <= 30.0
    record(
        "criterion 2 convergence speed",
        ok,
        f"relative change < 1e-3 at iteration {converged_at}, train accuracy {acc:.4f} "
        f"(need >= 0.95), {elapsed:.1f}s (limit 30s)",
    )
    assert ok


@pytest.fixture(scope="module")
def waveform_run():
    # the UCI file is not available offline; Breiman's generator is used instead
    ds = normalize_rows(waveform(2746, seed=0))
    tr, te = split(ds, 0.8, seed=0)
    lam, _ = select_lambda(tr, ModelConfig(widths=(10, 4)))
    run = fit_and_score(tr, te, ModelConfig(widths=(10, 4), lam=lam))
    oracle_acc = accuracy(ridge_classifier_oracle(tr.X, tr.labels, te.X), te.labels)
    raw_te = split(waveform(2746, seed=0), 0.8, seed=0)[1]
    bayes_acc = accuracy(waveform_bayes_predict(raw_te.X), raw_te.labels)
    return lam, run, oracle_acc, bayes_acc


def test_c3_waveform_accuracy(waveform_run):
    lam, run, _, bayes_acc = waveform_run
    ok = run.test_acc >= 0.78
    record(
        "criterion 3 waveform test accuracy",
        ok,
        f"{run.test_acc:.4f} (need >= 0.78), lambda {lam:g} chosen on validation, "
        f"Bayes-optimal accuracy on the same test split {bayes_acc:.4f}",
    )
    assert ok


def test_c3_surrogate_oracle_target(waveform_run):
    # pre-registered surrogate target: ridge-classifier oracle plus 5 points
    _, run, oracle_acc, bayes_acc = waveform_run
    target = oracle_acc + 0.05
    ok = run.test_acc >= target
    note = f"; the target exceeds the Bayes-optimal {bayes_acc:.4f}" if target > bayes_acc else ""
    record(
        "criterion 3 surrogate target (ridge oracle + 5 points)",
        ok,
        f"{run.test_acc:.4f} vs target {target:.4f} (oracle {oracle_acc:.4f}){note}",
    )
    assert ok


def _find_mnist(root: Path) -> tuple[Path, Path] | None:
    for stem_img, stem_lab in (("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
                               ("train-images.idx3-ubyte", "train-labels.idx1-ubyte")):
        for suffix in ("", ".gz"):
            img, lab = root / (stem_img + suffix), root / (stem_lab + suffix)
            if img.exists() and lab.exists():
                return img, lab
    return None


def test_c4_mnist_mini():
    root = os.environ.get("NGMN_MNIST_DIR")
    files = _find_mnist(Path(root)) if root else None
    if files is None:
        record("criterion 4 MNIST 10000-sample accuracy", False,
               "MNIST IDX files not found (set NGMN_MNIST_DIR); not run")
        pytest.fail("MNIST data unavailable: set NGMN_MNIST_DIR to the IDX files")
    t0 = time.perf_counter()
    full = load_idx(*files)
    ds = full.subset(np.arange(10000))
    tr, te = split(ds, 0.8, seed=0)
    run = fit_and_score(tr, te, ModelConfig(widths=(32, 16)))
    elapsed = time.perf_counter() - t0
    ok = run.test_acc >= 0.78 and elapsed <= 600.0
    record("criterion 4 MNIST 10000-sample accuracy", ok,
           f"{run.test_acc:.4f} (need >= 0.78), {elapsed:.0f}s (limit 600s)")
    assert ok


def test_c5_ablation_ordering():
    tr, te = split(blobs(seed=0), 0.8, seed=0)
    results = ablation(tr, te, ModelConfig(widths=(10, 8), max_iter=10, tol=1e-3), seeds=range(5))
    means = mean_accuracy(results)
    ridge, svm, aw = (means[name] for name in ABLATION_VARIANTS)
    ok = aw >= svm - 0.01 and svm >= ridge - 0.01
    record(
        "criterion 5 ablation ordering",
        ok,
        ", ".join(f"{name} {means[name]:.4f}" for name in ABLATION_VARIANTS) + " (ties within 0.01)",
    )
    assert ok


def test_c6_determinism(tmp_path):
    ds = blobs(seed=0)
    csv = tmp_path / "blobs.csv"
    np.savetxt(csv, np.column_stack([ds.labels, ds.X.T]), delimiter=",", fmt="%.17g")
    argv = ["train", "--data", str(csv), "--label-col", "0", "--widths", "10,8",
            "--lambda", "0.5", "--seed", "7"]
    codes = [cli_main([*argv, "--out", str(tmp_path / name)]) for name in ("a.ngmn", "b.ngmn")]
    same_model = (tmp_path / "a.ngmn").read_bytes() == (tmp_path / "b.ngmn").read_bytes()
    same_trace = (tmp_path / "a.ngmn.trace.csv").read_bytes() == (tmp_path / "b.ngmn.trace.csv").read_bytes()
    model = load_model(tmp_path / "a.ngmn")
    reloaded = load_model(model_bytes(model))
    X = np.random.default_rng(0).uniform(size=(ds.d, 100))
    scores = decision_scores(model.head, features(model, X))
    same_pred = np.array_equal(predict(model, X), predict(reloaded, X)) and np.array_equal(
        scores, decision_scores(reloaded.head, features(reloaded, X))
    )
    ok = codes == [0, 0] and same_model and same_trace and same_pred
    record(
        "criterion 6 determinism",
        ok,
        f"model files identical: {same_model}, traces identical: {same_trace}, "
        f"round-trip predictions on 100 inputs bit-exact: {same_pred}",
    )
    assert ok


def test_c7_block_monotonicity_and_g_sign():
    mono = verify.check_block_monotonicity(50)
    sign = verify.check_g_sign(20)
    ok = mono.passed and sign.passed
    record(
        "criterion 7 block monotonicity and slack sign",
        ok,
        f"largest objective increase {mono.worst:.3e} over 50 instances (slack 1e-9); "
        f"implemented sign strictly lower on 20/20 instances: {sign.passed}",
    )
    assert ok
