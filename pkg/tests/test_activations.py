import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ngmn.activations import KINDS, Activation, apply, invert, softmax_columns
from ngmn.errors import InvalidConfigError


def test_sigmoid_at_zero():
    assert apply(Activation("sigmoid"), np.array([[0.0]]))[0, 0] == 0.5


def test_leaky_relu_negative_side():
    assert apply(Activation("leaky_relu", slope=0.1), np.array([[-5.0]]))[0, 0] == pytest.approx(-0.5)


def test_identity_passes_through(rng):
    Z = rng.normal(size=(3, 4))
    np.testing.assert_array_equal(apply(Activation("identity"), Z), Z)


def test_sigmoid_and_tanh_ranges(rng):
    Z = rng.normal(scale=5.0, size=(4, 50))
    S = apply(Activation("sigmoid"), Z)
    T = apply(Activation("tanh"), Z)
    assert np.all((S > 0) & (S < 1))
    assert np.all((T > -1) & (T < 1))


def test_invert_sigmoid_half():
    assert invert(Activation("sigmoid"), np.array([[0.5]]))[0, 0] == 0.0


def test_invert_sigmoid_clips_at_one():
    value = invert(Activation("sigmoid", eps=1e-6), np.array([[1.0]]))[0, 0]
    assert value == pytest.approx(np.log((1 - 1e-6) / 1e-6), rel=1e-9)
    assert value == pytest.approx(13.8155, abs=1e-4)


def test_invert_tanh_clips_both_ends():
    act = Activation("tanh", eps=1e-3)
    out = invert(act, np.array([[-1.0, 1.0]]))
    np.testing.assert_allclose(out, [[-np.arctanh(1 - 1e-3), np.arctanh(1 - 1e-3)]])


def test_invert_leaky_relu_exact():
    assert invert(Activation("leaky_relu", slope=0.1), np.array([[-0.5]]))[0, 0] == pytest.approx(-5.0)


@pytest.mark.parametrize("kwargs", [{"kind": "relu"}, {"slope": 0.0}, {"slope": 1.0}, {"eps": 0.0}, {"eps": 0.1}])
def test_invalid_activation_config(kwargs):
    with pytest.raises(InvalidConfigError):
        Activation(**kwargs)


def test_roundtrip_thousand_samples():
    rng = np.random.default_rng(0)
    for kind in KINDS:
        act = Activation(kind)
        # keep sigma(z) at least eps away from the range boundaries
        z = rng.uniform(-8.0, 8.0, size=(1, 1000)) if kind in ("sigmoid", "tanh") else rng.normal(scale=10, size=(1, 1000))
        if kind == "tanh":
            z = z / 2.0
        assert np.max(np.abs(invert(act, apply(act, z)) - z)) <= 1e-10 * max(1.0, np.max(np.abs(z)))


@given(st.sampled_from(KINDS), st.floats(-10, 10), st.floats(1e-3, 5))
def test_every_kind_is_strictly_monotone(kind, z, gap):
    act = Activation(kind)
    lo, hi = apply(act, np.array([[z, z + gap]]))[0]
    assert lo < hi


@given(st.sampled_from(("leaky_relu", "identity")), st.floats(-1e3, 1e3))
def test_unbounded_kinds_invert_exactly(kind, z):
    act = Activation(kind, slope=0.25)
    back = invert(act, apply(act, np.array([[z]])))[0, 0]
    assert back == pytest.approx(z, abs=1e-12 * max(1.0, abs(z)))


# -------------------------------------------------------------- softmax

def test_softmax_symmetric_columns():
    out = softmax_columns(np.array([[0.0, 1.0], [0.0, 1.0]]))
    np.testing.assert_allclose(out, 0.5)
    np.testing.assert_allclose(softmax_columns(np.ones((3, 1))), 1.0 / 3.0)


def test_softmax_two_zero():
    out = softmax_columns(np.array([[2.0], [0.0]]))[:, 0]
    e2 = np.exp(2.0)
    np.testing.assert_allclose(out, [e2 / (e2 + 1), 1 / (e2 + 1)], rtol=1e-14)
    np.testing.assert_allclose(out, [0.8808, 0.1192], atol=1e-4)


def test_softmax_large_values_stay_finite():
    out = softmax_columns(np.array([[1000.0, -1000.0], [999.0, -1001.0]]))
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1), st.floats(-50, 50))
def test_softmax_columns_sum_to_one_and_shift_invariant(rows, cols, seed, shift):
    Z = np.random.default_rng(seed).normal(scale=3.0, size=(rows, cols))
    out = softmax_columns(Z)
    np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)
    assert np.all((out > 0) & (out <= 1))
    shifts = shift * np.arange(cols)[None, :]
    np.testing.assert_allclose(softmax_columns(Z + shifts), out, atol=1e-12)
