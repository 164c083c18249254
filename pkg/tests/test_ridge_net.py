import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ngmn.activations import Activation
from ngmn.errors import InvalidConfigError, InvalidInputError, ShapeError
from ngmn.oracle import fd_stationarity, ridge_classifier_oracle
from ngmn.ridge_net import (
    LayerParams,
    RidgeConfig,
    backward_labels,
    bias_given_weights,
    fit_layer,
    forward,
    forward_layer,
    layer_loss,
    predict_ridge,
    refit_layers,
    train_ridge_network,
)
from ngmn.synthetic import blobs

IDENT = Activation("identity")
SIGMOID = Activation("sigmoid")


# ---------------------------------------------------------- forward_layer

def test_forward_identity_layer(rng):
    H = rng.normal(size=(3, 5))
    out = forward_layer(LayerParams(np.eye(3), np.zeros(3), IDENT), H)
    np.testing.assert_array_equal(out, H)


def test_forward_bias_broadcast():
    out = forward_layer(LayerParams(np.zeros((2, 2)), np.array([1.0, -1.0]), IDENT), np.ones((2, 4)))
    np.testing.assert_array_equal(out, np.tile([[1.0], [-1.0]], (1, 4)))


def test_forward_sigmoid_scalar():
    out = forward_layer(LayerParams(np.eye(1), np.zeros(1), SIGMOID), np.array([[0.0]]))
    assert out[0, 0] == 0.5


def test_forward_shape_mismatch():
    with pytest.raises(ShapeError):
        forward_layer(LayerParams(np.eye(3), np.zeros(3), IDENT), np.ones((2, 4)))


# -------------------------------------------------------------- fit_layer

def _flat_loss(W_shape, H, T, lam):
    k = int(np.prod(W_shape))

    def obj(x):
        return layer_loss(x[:k].reshape(W_shape), x[k:], H, T, lam)

    return obj


def test_fit_layer_identity_instance_is_stationary():
    H = np.eye(2)
    T = np.eye(2)
    W, b = fit_layer(H, T, 1.0)
    # centered data: X_C = T_C = [[.5,-.5],[-.5,.5]], X_C X_C^T = X_C, so
    # W = (X_C + I)^-1 X_C = X_C / 2
    np.testing.assert_allclose(W, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)
    obj = _flat_loss(W.shape, H, T, 1.0)
    assert fd_stationarity(obj, np.concatenate([W.ravel(), b])) <= 1e-8


def test_bias_only_is_row_mean():
    T = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    H = np.ones((1, 3))
    b = bias_given_weights(np.zeros((1, 2)), H, T)
    np.testing.assert_allclose(b, [2 / 3, 1 / 3], rtol=1e-15)


def test_heavy_regularization_shrinks_weights(rng):
    H = rng.uniform(size=(4, 30))
    T = rng.uniform(size=(3, 30))
    W, _ = fit_layer(H, T, 1e6)
    assert np.linalg.norm(W) <= 1e-3


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_fit_layer_rejects_non_positive_lambda(lam):
    with pytest.raises(InvalidConfigError):
        fit_layer(np.ones((2, 3)), np.ones((1, 3)), lam)


def test_fit_layer_sample_mismatch():
    with pytest.raises(ShapeError):
        fit_layer(np.ones((2, 3)), np.ones((1, 4)), 1.0)


def test_fit_layer_beats_random_perturbations():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d_in, d_out, n = (int(v) for v in rng.integers([1, 1, 2], [11, 11, 41]))
        H = rng.normal(size=(d_in, n))
        T = rng.normal(size=(d_out, n))
        lam = float(2.0 ** rng.uniform(-3, 3))
        W, b = fit_layer(H, T, lam)
        best = layer_loss(W, b, H, T, lam)
        for _ in range(200):
            scale = 10.0 ** rng.uniform(-4, 0)
            dW = scale * rng.normal(size=W.shape)
            db = scale * rng.normal(size=b.shape)
            assert layer_loss(W + dW, b + db, H, T, lam) >= best - 1e-12 * max(1.0, best)
        obj = _flat_loss(W.shape, H, T, lam)
        assert fd_stationarity(obj, np.concatenate([W.ravel(), b])) <= 1e-6 * max(1.0, best)


@given(st.integers(0, 2**31 - 1))
def test_fit_layer_bias_is_bitwise_mean_residual(seed):
    rng = np.random.default_rng(seed)
    H = rng.normal(size=(3, 9))
    T = rng.normal(size=(2, 9))
    W, b = fit_layer(H, T, 0.7)
    assert np.array_equal(b, (T - W.T @ H).sum(axis=1) / H.shape[1])


@given(st.integers(0, 2**31 - 1))
def test_layer_loss_does_not_increase_after_fit(seed):
    rng = np.random.default_rng(seed)
    H = rng.normal(size=(4, 12))
    T = rng.normal(size=(3, 12))
    W0 = rng.normal(size=(4, 3))
    b0 = rng.normal(size=3)
    W, b = fit_layer(H, T, 0.5)
    assert layer_loss(W, b, H, T, 0.5) <= layer_loss(W0, b0, H, T, 0.5)


# --------------------------------------------------------- backward_labels

def test_backward_labels_hand_example():
    params = LayerParams(np.array([[1.0], [0.0]]), np.array([1.0]), SIGMOID)
    out = backward_labels(params, np.array([[3.0]]))
    e2 = np.exp(2.0)
    np.testing.assert_allclose(out[:, 0], [e2 / (e2 + 1), 1 / (e2 + 1)], rtol=1e-14)


def test_backward_labels_zero_weights_uniform(rng):
    params = LayerParams(np.zeros((4, 2)), rng.normal(size=2), SIGMOID)
    np.testing.assert_allclose(backward_labels(params, rng.normal(size=(2, 5))), 0.25, atol=1e-15)


def test_backward_labels_bias_equal_to_target_uniform():
    params = LayerParams(np.array([[2.0], [-1.0], [0.5]]), np.array([0.7]), SIGMOID)
    out = backward_labels(params, np.full((1, 3), 0.7))
    np.testing.assert_allclose(out, 1.0 / 3.0, atol=1e-15)


def test_backward_labels_shape_mismatch():
    params = LayerParams(np.ones((3, 2)), np.zeros(2), SIGMOID)
    with pytest.raises(ShapeError):
        backward_labels(params, np.ones((3, 4)))


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_backward_labels_columns_sum_to_one(seed, center):
    rng = np.random.default_rng(seed)
    params = LayerParams(rng.normal(scale=3, size=(5, 3)), rng.normal(size=3), SIGMOID)
    out = backward_labels(params, rng.normal(size=(3, 7)), center=center)
    np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_centered_backward_uses_centered_target(seed):
    rng = np.random.default_rng(seed)
    params = LayerParams(rng.normal(size=(4, 3)), rng.normal(size=3), SIGMOID)
    Y = rng.normal(size=(3, 6))
    ref = LayerParams(params.W, np.zeros(3), SIGMOID)
    expected = backward_labels(ref, Y - Y.mean(axis=1, keepdims=True))
    np.testing.assert_allclose(backward_labels(params, Y, center=True), expected, atol=1e-12)


# ---------------------------------------------------------------- training

def _two_class_blobs():
    # seed 1 is a draw whose plain ridge classifier separates the training set
    return blobs(seed=1, n=200, d=2, c=2, spread=4.0)


def test_two_class_blobs_oracle_is_separable():
    ds = _two_class_blobs()
    pred = ridge_classifier_oracle(ds.X, ds.labels, ds.X)
    assert np.mean(pred == ds.labels) >= 0.99


def test_two_class_blobs_training_accuracy():
    ds = _two_class_blobs()
    fit = train_ridge_network(ds.X, ds.Y_onehot, RidgeConfig(0.5, (4, 2)), max_iter=10, seed=0)
    assert len(fit.losses) <= 10
    assert fit.train_accuracy[-1] >= 0.99
    assert np.mean(predict_ridge(fit.layers, ds.X) == ds.labels) >= 0.99


def test_single_iteration_contract():
    ds = _two_class_blobs()
    fit = train_ridge_network(ds.X, ds.Y_onehot, RidgeConfig(0.5, (4, 2)), max_iter=1)
    assert len(fit.losses) == 1 and len(fit.train_accuracy) == 1


def test_single_class_rejected():
    X = np.ones((2, 4))
    with pytest.raises(InvalidInputError):
        train_ridge_network(X, np.ones((1, 4)), RidgeConfig(0.5, (1,)))


def test_non_onehot_rejected():
    Y = np.array([[1.0, 0.5], [0.0, 0.5]])
    with pytest.raises(InvalidInputError):
        train_ridge_network(np.ones((2, 2)), Y, RidgeConfig(0.5, (2,)))


def test_last_width_must_match_classes():
    ds = _two_class_blobs()
    with pytest.raises(InvalidInputError):
        train_ridge_network(ds.X, ds.Y_onehot, RidgeConfig(0.5, (4, 3)))


@pytest.mark.parametrize("kwargs", [{"lam": 0.0}, {"widths": ()}, {"widths": (3, 0)}, {"target_space": "logit"}])
def test_invalid_ridge_config(kwargs):
    base = {"lam": 0.5, "widths": (4, 2)}
    with pytest.raises((InvalidConfigError, InvalidInputError)):
        RidgeConfig(**{**base, **kwargs})


@pytest.mark.parametrize("flags", [(True, True), (False, False), (True, False)])
def test_training_is_bit_reproducible(flags):
    ds = blobs(seed=3, n=90, d=4, c=3)
    cfg = RidgeConfig(0.5, (6, 3), center_backward=flags[0], bottom_up_refit=flags[1])
    a = train_ridge_network(ds.X, ds.Y_onehot, cfg, max_iter=4, seed=11)
    b = train_ridge_network(ds.X, ds.Y_onehot, cfg, max_iter=4, seed=11)
    assert a.losses == b.losses
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.W, lb.W) and np.array_equal(la.b, lb.b)


def test_direct_target_space_trains():
    ds = _two_class_blobs()
    cfg = RidgeConfig(0.5, (4, 2), target_space="direct")
    fit = train_ridge_network(ds.X, ds.Y_onehot, cfg, max_iter=5)
    assert all(np.isfinite(fit.losses))
    assert fit.train_accuracy[-1] >= 0.9


def test_top_down_sweep_fits_each_layer_to_its_target(rng):
    layers = [
        LayerParams(rng.normal(size=(3, 4)), np.zeros(4), SIGMOID),
        LayerParams(rng.normal(size=(4, 2)), np.zeros(2), SIGMOID),
    ]
    X = rng.uniform(size=(3, 20))
    Y = np.zeros((2, 20))
    Y[rng.integers(0, 2, size=20), np.arange(20)] = 1.0
    cfg = RidgeConfig(0.5, (4, 2), bottom_up_refit=False)
    Hs = forward(layers, X)
    new, total = refit_layers(layers, Hs, Y, cfg)
    T_top = SIGMOID.inverse(Y)
    W, b = fit_layer(Hs[1], T_top, 0.5)
    assert np.array_equal(new[1].W, W) and np.array_equal(new[1].b, b)
    T_low = SIGMOID.inverse(backward_labels(new[1], T_top, center=True))
    W0, b0 = fit_layer(Hs[0], T_low, 0.5)
    assert np.array_equal(new[0].W, W0)
    expected = layer_loss(W, b, Hs[1], T_top, 0.5) + layer_loss(W0, b0, Hs[0], T_low, 0.5)
    assert total == pytest.approx(expected, rel=1e-12)


def test_predict_ridge_argmax_and_ties():
    layer = [LayerParams(np.eye(2), np.zeros(2), IDENT)]
    X = np.array([[0.9, 0.5, 0.2], [0.1, 0.5, 0.8]])
    np.testing.assert_array_equal(predict_ridge(layer, X), [0, 0, 1])
