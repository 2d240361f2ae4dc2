import numpy as np
import pytest
from hypothesis import given, strategies as st

from paramrc.errors import DegenerateError, InsufficientDataError
from paramrc.readout import (RidgeModel, SplitSpec, add_bias, make_targets, nmse, predict,
                             ridge_fit, split)
from paramrc.reservoir import FeatureConfig, fit_preprocess


def dense_oracle(x, y, lam):
    return np.linalg.inv(x.T @ x + lam * np.eye(x.shape[1])) @ (x.T @ y)


def test_make_targets():
    np.testing.assert_allclose(make_targets([0.1, 0.2, 0.3]), [0.2, 0.3])
    with pytest.raises(InsufficientDataError):
        make_targets([0.4])
    s = np.random.default_rng(0).uniform(size=50)
    y = make_targets(s)
    assert all(y[n] == s[n + 1] for n in range(49))


def test_split_arithmetic_and_order():
    x = np.arange(1201.0)[:, None]
    y = np.arange(1200.0)
    (xtr, ytr), (xte, yte) = split(x, y, SplitSpec(200, 0.8))
    assert len(ytr) == 800 and len(yte) == 200
    assert ytr[0] == 200 and ytr.max() < yte.min()
    np.testing.assert_array_equal(xte[:, 0], yte)


def test_split_errors():
    with pytest.raises(InsufficientDataError):
        split(np.zeros((100, 1)), np.zeros(100), SplitSpec(100))
    with pytest.raises(ValueError):
        split(np.zeros((5, 1)), np.zeros(10), SplitSpec(0))
    with pytest.raises(ValueError):
        SplitSpec(train_fraction=1.0)


def test_ridge_identity_examples():
    eye = np.eye(2)
    np.testing.assert_allclose(ridge_fit(eye, np.array([1.0, 2.0]), 1e-12).weights, [1, 2], atol=1e-9)
    np.testing.assert_allclose(ridge_fit(eye, np.array([1.0, 2.0]), 1.0).weights, [0.5, 1.0])


def test_ridge_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n, d = int(rng.integers(5, 60)), int(rng.integers(1, 30))
        x, y = rng.standard_normal((n, d)), rng.standard_normal(n)
        lam = 10 ** rng.uniform(-4, 1)
        ref = dense_oracle(x, y, lam)
        got = ridge_fit(x, y, lam).weights
        assert np.linalg.norm(got - ref) <= 1e-8 * np.linalg.norm(ref)


def test_ridge_normal_equation_residual():
    rng = np.random.default_rng(8)
    x, y = rng.standard_normal((300, 120)), rng.standard_normal(300)
    b = ridge_fit(x, y, 1e-3).weights
    rhs = x.T @ y
    res = (x.T @ x + 1e-3 * np.eye(120)) @ b - rhs
    assert np.linalg.norm(res) < 1e-8 * np.linalg.norm(rhs)


@given(st.integers(0, 10_000), st.floats(1e-4, 10), st.floats(1.01, 100))
def test_ridge_norm_monotone_in_lambda(seed, lam, factor):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((20, 8)), rng.standard_normal(20)
    n1 = np.linalg.norm(ridge_fit(x, y, lam).weights)
    n2 = np.linalg.norm(ridge_fit(x, y, lam * factor).weights)
    assert n1 >= n2 * (1 - 1e-12)


def test_ridge_input_checks():
    with pytest.raises(ValueError):
        ridge_fit(np.eye(2), np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        ridge_fit(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        ridge_fit(np.eye(2), np.ones(2), 0.0)


def test_predict_examples():
    m = RidgeModel(np.zeros(3), 1e-3)
    np.testing.assert_array_equal(predict(m, np.ones((4, 3))), 0)
    w = np.array([0.5, -1.0, 2.0])
    np.testing.assert_array_equal(predict(RidgeModel(w, 1e-3), np.eye(3)), w)
    with pytest.raises(ValueError):
        predict(m, np.ones((4, 2)))


def test_fit_predict_interpolates_square_system():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((12, 12)) + 4 * np.eye(12)
    y = rng.standard_normal(12)
    m = ridge_fit(x, y, 1e-12)
    np.testing.assert_allclose(predict(m, x), y, atol=1e-6)


def test_bias_column_and_model_design():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(add_bias(x), [[1, 2, 1], [3, 4, 1]])
    raw = np.array([[1.0, 5.0], [10.0, 5.0], [100.0, 5.0]])
    state = fit_preprocess(raw, FeatureConfig(n_virtual_nodes=1, n_fft=0))
    m = RidgeModel(np.array([2.0, 0.5]), 1e-3, state, intercept_column=True)
    assert m.design(raw).shape == (3, 2)
    np.testing.assert_allclose(m.predict_raw(raw), 2 * state.apply(raw)[:, 0] + 0.5)


def test_nmse_examples():
    s = np.array([0.2, 0.9, 0.4, 0.7])
    assert nmse(s, s) == 0
    assert nmse(s, np.full(4, s.mean())) == pytest.approx(1.0)
    assert nmse([0.0, 1.0], [1.0, 0.0]) == 4.0
    with pytest.raises(DegenerateError):
        nmse([1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        nmse([1.0, 2.0], [1.0])


@given(st.integers(0, 10_000), st.floats(-100, 100).filter(lambda a: abs(a) > 1e-3),
       st.floats(-100, 100))
def test_nmse_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    s, p = rng.uniform(size=30), rng.uniform(size=30)
    assert abs(nmse(a * s + b, a * p + b) - nmse(s, p)) < 1e-12 * max(1.0, nmse(s, p))
