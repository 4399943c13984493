import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rahbo.errors import InputError
from rahbo.kernel import KernelSpec, kernel_matrix, kernel_vector
from rahbo.variance import (
    HAT_SIGMA_FLOOR,
    RepeatedObservation,
    build_hat_sigma,
    eta_variance_proxy,
    init_variance_model,
    sample_stats,
    truncate_hat_sigma,
    update_variance_gp,
    var_confidence_bounds,
)

SPEC = KernelSpec("matern52", (0.3,))


def test_sample_stats_examples():
    assert sample_stats([4.0, 4.0, 4.0]) == (4.0, 0.0)
    assert sample_stats([1.0, 2.0, 3.0]) == (2.0, 1.0)
    obs = RepeatedObservation.from_samples([0.5], [1.0, 2.0, 3.0])
    assert (obs.k, obs.sample_mean, obs.sample_var) == (3, 2.0, 1.0)


def test_sample_stats_errors():
    with pytest.raises(InputError):
        sample_stats([1.0])
    with pytest.raises(InputError):
        sample_stats([1.0, 2.0], k=3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20))
def test_sample_variance_pairwise_identity(ys):
    y = np.array(ys)
    k = y.size
    pairwise = np.sum((y[:, None] - y[None, :]) ** 2) / (2 * k * (k - 1))
    _, var = sample_stats(y)
    assert var == pytest.approx(pairwise, abs=1e-12 * max(1.0, np.max(y**2)) * k)


def test_eta_proxy():
    assert eta_variance_proxy(1.0, 10) == pytest.approx(2 / 9)
    assert eta_variance_proxy(1.0, 3) == 1.0
    assert eta_variance_proxy(3.0, 10) == pytest.approx(9 * eta_variance_proxy(1.0, 10))
    with pytest.raises(InputError):
        eta_variance_proxy(1.0, 1)


def test_prior_variance_model():
    state = init_variance_model(SPEC, 0.0, 1.0, 10, lam=2.0)
    mean, sd = state.predict(np.array([[0.1], [0.9]]))
    np.testing.assert_array_equal(mean, 0.0)
    np.testing.assert_allclose(sd**2, 0.5)


def test_single_observation_closed_form():
    state = init_variance_model(SPEC, 0.0, 1.0, 3, eta_proxy=1.0)
    state = update_variance_gp(state, [0.5], 2.0)
    mean, sd = state.predict(np.array([[0.5]]))
    assert mean[0] == pytest.approx(1.0, abs=1e-14)
    assert sd[0] ** 2 == pytest.approx(0.5, abs=1e-14)


def test_sequential_updates_match_dense_oracle(rng):
    eta = 0.3
    state = init_variance_model(SPEC, 0.0, 2.0, 10, eta_proxy=eta)
    X = rng.uniform(size=(15, 1))
    s = rng.gamma(2.0, 0.3, size=15)
    for x, v in zip(X, s):
        state = update_variance_gp(state, x, v)
    A_inv = np.linalg.inv(kernel_matrix(SPEC, X) + eta * np.eye(15))
    Xq = rng.uniform(size=(10, 1))
    mean, sd = state.predict(Xq)
    for i, x in enumerate(Xq):
        kx = kernel_vector(SPEC, X, x)
        assert mean[i] == pytest.approx(kx @ A_inv @ s, abs=1e-8)
        assert sd[i] ** 2 == pytest.approx(1.0 - kx @ A_inv @ kx, abs=1e-8)


def test_update_rejects_negative_variance():
    state = init_variance_model(SPEC, 0.0, 1.0, 10)
    with pytest.raises(InputError):
        update_variance_gp(state, [0.5], -0.1)


def test_confidence_bounds(rng):
    prior = init_variance_model(SPEC, 0.0, 1.0, 10)
    assert var_confidence_bounds(prior, [0.3], 2.0) == (-2.0, 2.0)
    state = init_variance_model(SPEC, 0.0, 1.0, 10, X=rng.uniform(size=(6, 1)), sample_vars=rng.uniform(size=6))
    Xq = rng.uniform(size=(20, 1))
    mean, sd = state.predict(Xq)
    lo0, hi0 = var_confidence_bounds(state, Xq, 0.0)
    np.testing.assert_array_equal(lo0, mean)
    np.testing.assert_array_equal(hi0, mean)
    lo, hi = var_confidence_bounds(state, Xq, 1.7)
    np.testing.assert_allclose(hi - lo, 2 * 1.7 * sd, atol=1e-12)
    assert np.all(lo <= mean) and np.all(mean <= hi)


def test_truncation_examples():
    assert truncate_hat_sigma(5.0, 0.0, 2.0, 10) == pytest.approx(0.2)
    assert truncate_hat_sigma(0.5, 0.0, 2.0, 10) == pytest.approx(0.05)
    assert truncate_hat_sigma(-1.0, 0.0, 2.0, 10) == pytest.approx(HAT_SIGMA_FLOOR / 10)
    assert truncate_hat_sigma(0.01, 0.1, 2.0, 10) == pytest.approx(0.01)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(0, 12), beta_var=st.floats(0, 5))
def test_hat_sigma_range(seed, n, beta_var):
    rng = np.random.default_rng(seed)
    var_hi, k = 1.5, 10
    state = init_variance_model(SPEC, 0.0, var_hi, k, X=rng.uniform(size=(n, 1)), sample_vars=rng.gamma(1.0, 1.0, n))
    visited = rng.uniform(size=(n, 1))
    diag = build_hat_sigma(state, visited, beta_var)
    assert diag.shape == (n,)
    assert np.all(diag >= HAT_SIGMA_FLOOR / k) and np.all(diag <= var_hi / k)


@pytest.mark.parametrize("noise", ["gaussian", "uniform"])
def test_sample_variance_unbiased(noise):
    rng = np.random.default_rng(3)
    k, reps, rho2 = 10, 100_000, 0.7
    if noise == "gaussian":
        y = rng.normal(0.0, np.sqrt(rho2), size=(reps, k))
    else:
        half = np.sqrt(3 * rho2)
        y = rng.uniform(-half, half, size=(reps, k))
    s2 = y.var(axis=1, ddof=1)
    se = s2.std(ddof=1) / np.sqrt(reps)
    assert abs(s2.mean() - rho2) <= 3 * se
