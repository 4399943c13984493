"""Repeated-evaluation statistics and the GP model of the noise variance.

Every queried input is evaluated ``k`` times. The unbiased sample variance
of those ``k`` values is a noisy observation of the noise variance at that
input; a homoscedastic GP over these observations gives confidence bounds
on the variance function, and its upper bound (capped at ``var_hi``) feeds
the noise matrix of the objective GP.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from rahbo.errors import InputError
from rahbo.gp import HeteroGPState, fit
from rahbo.kernel import KernelSpec

HAT_SIGMA_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class RepeatedObservation:
    x: np.ndarray
    samples: np.ndarray
    sample_mean: float
    sample_var: float

    @classmethod
    def from_samples(cls, x, samples) -> "RepeatedObservation":
        samples = np.asarray(samples, dtype=float).ravel()
        m, v = sample_stats(samples)
        return cls(np.asarray(x, dtype=float).ravel(), samples, m, v)

    @property
    def k(self) -> int:
        return self.samples.size


def sample_stats(samples, k: int | None = None) -> tuple[float, float]:
    """Sample mean and unbiased sample variance of ``k >= 2`` repeats."""
    samples = np.asarray(samples, dtype=float).ravel()
    if k is not None and k != samples.size:
        raise InputError(f"k={k} does not match {samples.size} samples")
    if samples.size < 2:
        raise InputError("at least k=2 repeated samples are needed for a sample variance")
    mean = float(samples.mean())
    var = float(np.sum((samples - mean) ** 2) / (samples.size - 1))
    return mean, var


def eta_variance_proxy(var_hi: float, k: int) -> float:
    """Conservative noise level ``2 var_hi^2 / (k - 1)`` of a sample variance."""
    if k < 2:
        raise InputError("k must be >= 2")
    if not var_hi > 0:
        raise InputError("var_hi must be > 0")
    return 2.0 * var_hi**2 / (k - 1)


@dataclass(frozen=True, eq=False)
class VarianceModelState:
    gp: HeteroGPState
    var_lo: float
    var_hi: float
    k: int
    eta_proxy: float

    def __post_init__(self):
        if not 0 <= self.var_lo < self.var_hi:
            raise InputError(f"need 0 <= var_lo < var_hi, got {self.var_lo}, {self.var_hi}")
        if not self.eta_proxy > 0:
            raise InputError("eta_proxy must be > 0")
        if self.k < 2:
            raise InputError("k must be >= 2")

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation of the variance function."""
        mean, var = self.gp.predict(Xq)
        return mean, np.sqrt(var)


def init_variance_model(
    kernel: KernelSpec,
    var_lo: float,
    var_hi: float,
    k: int,
    lam: float = 1.0,
    eta_proxy: float | None = None,
    X=None,
    sample_vars=None,
) -> VarianceModelState:
    """Variance model with the given (possibly empty) data."""
    if eta_proxy is None:
        eta_proxy = eta_variance_proxy(var_hi, k)
    X = np.zeros((0, kernel.dim)) if X is None else np.asarray(X, dtype=float).reshape(-1, kernel.dim)
    s = np.zeros(0) if sample_vars is None else np.asarray(sample_vars, dtype=float).ravel()
    if np.any(s < 0):
        raise InputError("sample variances must be nonnegative")
    gp = fit(kernel, X, s, np.full(s.size, eta_proxy), lam)
    return VarianceModelState(gp, float(var_lo), float(var_hi), int(k), float(eta_proxy))


def update_variance_gp(state: VarianceModelState, x, sample_var: float) -> VarianceModelState:
    """New state with ``(x, sample_var)`` appended and the GP refitted."""
    if sample_var < 0:
        raise InputError(f"sample variance must be nonnegative, got {sample_var}")
    gp = state.gp
    x = np.asarray(x, dtype=float).reshape(1, gp.kernel.dim)
    X = np.vstack([gp.X, x])
    s = np.append(gp.y, float(sample_var))
    new_gp = fit(gp.kernel, X, s, np.full(s.size, state.eta_proxy), gp.lam)
    return replace(state, gp=new_gp)


def var_confidence_bounds(state: VarianceModelState, x, beta_var: float):
    """Lower and upper confidence bounds ``mean -/+ beta_var * std``."""
    if beta_var < 0:
        raise InputError("beta_var must be >= 0")
    mean, std = state.predict(x)
    lcb, ucb = mean - beta_var * std, mean + beta_var * std
    if np.ndim(x) <= 1 and lcb.size == 1:
        return float(lcb[0]), float(ucb[0])
    return lcb, ucb


def truncate_hat_sigma(ucb_var, var_lo: float, var_hi: float, k: int) -> np.ndarray:
    """Noise diagonal for sample means: ``clip(ucb, floor, var_hi) / k``."""
    floor = max(var_lo, HAT_SIGMA_FLOOR)
    ucb_var = np.asarray(ucb_var, dtype=float)
    return np.maximum(floor, np.minimum(ucb_var, var_hi)) / k


def build_hat_sigma(state: VarianceModelState, visited, beta_var: float = 2.0) -> np.ndarray:
    """Noise variances of the sample means at ``visited`` points."""
    visited = np.asarray(visited, dtype=float)
    if visited.size == 0:
        return np.zeros(0)
    _, ucb = var_confidence_bounds(state, visited.reshape(-1, state.gp.kernel.dim), beta_var)
    return truncate_hat_sigma(np.atleast_1d(ucb), state.var_lo, state.var_hi, state.k)
