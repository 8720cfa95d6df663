import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from conftest import pinball_grid_oracle
from qconnect.quantreg import QuantileRegressionError, fit_quantile, fit_quantile_many, pinball_loss


def lp_objective(X, y, tau):
    """Independent LP solve of the check-loss problem (HiGHS)."""
    T, k = X.shape
    c = np.r_[np.zeros(k), tau * np.ones(T), (1 - tau) * np.ones(T)]
    A = np.hstack([X, np.eye(T), -np.eye(T)])
    res = linprog(c, A_eq=A, b_eq=y, bounds=[(None, None)] * k + [(0, None)] * (2 * T), method="highs")
    assert res.status == 0
    return res.fun, res.x[:k]


def test_constant_response():
    fit = fit_quantile(np.ones((15, 1)), np.full(15, 2.5), 0.3)
    assert fit.coefficients[0] == pytest.approx(2.5, abs=1e-12)
    assert fit.objective == pytest.approx(0.0, abs=1e-12)
    assert fit.converged


@pytest.mark.parametrize("tau", [0.05, 0.25, 0.3, 0.5, 0.75, 0.95])
def test_intercept_only_matches_grid_oracle(tau):
    y = np.arange(1.0, 11.0)
    _, best = pinball_grid_oracle(y, tau)
    fit = fit_quantile(np.ones((10, 1)), y, tau)
    assert fit.objective == pytest.approx(best, abs=1e-8)


def test_linear_recovery_and_lp_agreement():
    rng = np.random.default_rng(20240224)  # documented seed
    x = rng.normal(size=2000)
    y = 1 + 2 * x + rng.normal(size=2000)
    X = np.column_stack([np.ones(2000), x])
    fit = fit_quantile(X, y, 0.5)
    np.testing.assert_allclose(fit.coefficients, [1, 2], atol=0.05)
    lp_val, _ = lp_objective(X, y, 0.5)
    assert fit.objective == pytest.approx(lp_val, rel=1e-8)


@pytest.mark.parametrize("tau", [0.05, 0.2, 0.5, 0.8, 0.95])
def test_matches_lp_on_heavy_tailed_multivariate(tau, rng):
    X = np.column_stack([np.ones(150), rng.normal(0, 0.01, (150, 4))])
    y = X @ np.array([0.001, 0.3, -0.2, 0.0, 0.1]) + 0.01 * rng.standard_t(3, 150)
    fit = fit_quantile(X, y, tau)
    lp_val, _ = lp_objective(X, y, tau)
    assert fit.objective == pytest.approx(lp_val, rel=1e-8, abs=1e-12)
    assert fit.converged


def test_batch_equals_single(rng):
    X = np.column_stack([np.ones(120), rng.normal(size=(120, 3))])
    Y = rng.normal(size=(120, 4))
    batch = fit_quantile_many(X, Y, 0.3)
    for j in range(4):
        single = fit_quantile(X, Y[:, j], 0.3)
        assert batch[j].objective == pytest.approx(single.objective, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5, 0.9]))
def test_objective_never_exceeds_zero_vector(seed, tau):
    r = np.random.default_rng(seed)
    X = np.column_stack([np.ones(60), r.normal(size=(60, 2))])
    y = r.standard_cauchy(60)
    fit = fit_quantile(X, y, tau)
    assert fit.objective <= pinball_loss(y, tau) + 1e-12
    assert fit.objective >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.05, 0.5, 0.95]))
def test_subgradient_condition(seed, tau):
    r = np.random.default_rng(seed)
    X = np.column_stack([np.ones(80), r.normal(size=(80, 3))])
    y = X @ r.normal(size=4) + r.normal(size=80)
    fit = fit_quantile(X, y, tau)
    scale = np.max(np.abs(y))
    free = np.abs(fit.residuals) > 1e-9 * scale
    g = X[free].T @ (tau - (fit.residuals[free] < 0))
    assert np.all(np.abs(g) <= X.shape[1] * np.max(np.abs(X), axis=0) + 1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_scale_equivariance(seed, c):
    r = np.random.default_rng(seed)
    X = np.column_stack([np.ones(50), r.normal(size=(50, 2))])
    y = r.normal(size=50)
    a = fit_quantile(X, y, 0.4)
    b = fit_quantile(X, c * y, 0.4)
    assert b.objective == pytest.approx(c * a.objective, rel=1e-8)


def test_exactly_interpolable_data_has_zero_residuals(rng):
    X = np.column_stack([np.ones(40), rng.normal(size=(40, 2))])
    y = X @ np.array([0.5, -1.0, 2.0])
    fit = fit_quantile(X, y, 0.5)
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-10)


def test_errors(rng):
    X = np.column_stack([np.ones(20), rng.normal(size=20)])
    y = rng.normal(size=20)
    with pytest.raises(QuantileRegressionError, match="tau"):
        fit_quantile(X, y, 1.0)
    with pytest.raises(QuantileRegressionError, match="observations"):
        fit_quantile(X[:2], y[:2], 0.5)
    with pytest.raises(QuantileRegressionError, match="rank"):
        fit_quantile(np.column_stack([X, X[:, 1]]), y, 0.5)
    bad = y.copy()
    bad[3] = np.nan
    with pytest.raises(QuantileRegressionError, match="non-finite"):
        fit_quantile(X, bad, 0.5)


def test_residual_count_and_tau_recorded(rng):
    X = np.column_stack([np.ones(30), rng.normal(size=30)])
    fit = fit_quantile(X, rng.normal(size=30), 0.7)
    assert fit.residuals.shape == (30,) and fit.tau == 0.7 and fit.iterations > 0
