"""Heteroscedastic Gaussian-process regression with a regularised Gram matrix.

The model is ``f ~ GP(0, k / lam)`` observed through independent noise
with per-point variances ``noise_diag``. Writing ``A = K + lam * diag(noise)``
the posterior is

    mean(x) = k(x)^T A^{-1} y
    var(x)  = (k(x, x) - k(x)^T A^{-1} k(x)) / lam

and the log evidence uses ``y ~ N(0, A / lam)``, which is the same model
written as ``K / lam + diag(noise)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from rahbo.errors import InputError, NumericalError
from rahbo.kernel import KernelFamily, KernelSpec, cross_kernel, kernel_diag, kernel_matrix, parse_family

JITTER_START = 1e-10
JITTER_MAX = 1e-4


def robust_cholesky(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``A``, adding diagonal jitter on failure.

    Jitter starts at 1e-10 and grows tenfold up to 1e-4; returns the factor
    together with the jitter that was actually added (0.0 if none).
    """
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    try:
        return linalg.cholesky(A, lower=True, check_finite=True), 0.0
    except linalg.LinAlgError:
        pass
    jitter = JITTER_START
    eye = np.eye(n)
    while jitter <= JITTER_MAX * (1 + 1e-12):
        try:
            return linalg.cholesky(A + jitter * eye, lower=True), jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(f"Cholesky failed on a {n}x{n} matrix even with jitter {JITTER_MAX:g}")


@dataclass(frozen=True, eq=False)
class HeteroGPState:
    """A fitted heteroscedastic GP; immutable once built by :func:`fit`."""

    kernel: KernelSpec
    X: np.ndarray
    y: np.ndarray
    noise_diag: np.ndarray
    lam: float
    chol: np.ndarray
    weights: np.ndarray  # A^{-1} y
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at each row of ``Xq``."""
        Xq = _points(Xq, self.kernel.dim)
        prior = kernel_diag(self.kernel, Xq)
        if self.n == 0:
            return np.zeros(Xq.shape[0]), prior / self.lam
        Kq = cross_kernel(self.kernel, self.X, Xq)
        mean = Kq.T @ self.weights
        V = linalg.solve_triangular(self.chol, Kq, lower=True, check_finite=False)
        var = (prior - np.einsum("ij,ij->j", V, V)) / self.lam
        return mean, np.maximum(var, 0.0)


def _points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, dim) if dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise InputError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X


def fit(kernel: KernelSpec, X, y, noise_diag, lam: float = 1.0) -> HeteroGPState:
    """Condition the GP on ``(X, y)`` with per-point noise variances.

    An empty data set gives a valid prior-only state.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InputError(f"lambda must be > 0, got {lam}")
    y = np.asarray(y, dtype=float).ravel()
    noise = np.asarray(noise_diag, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        X = X.reshape(0, kernel.dim)
    X = _points(X, kernel.dim)
    if not (X.shape[0] == y.size == noise.size):
        raise InputError(
            f"X, y and noise_diag must have equal length, got {X.shape[0]}, {y.size}, {noise.size}"
        )
    if np.any(~np.isfinite(noise)) or np.any(noise <= 0):
        raise InputError("noise_diag entries must be strictly positive")
    if np.any(~np.isfinite(y)):
        raise InputError("targets must be finite")
    A = kernel_matrix(kernel, X) + lam * np.diag(noise)
    L, jitter = robust_cholesky(A)
    w = linalg.cho_solve((L, True), y) if y.size else np.zeros(0)
    return HeteroGPState(kernel, X.copy(), y.copy(), noise.copy(), float(lam), L, w, jitter)


def _scalar_or_array(values: np.ndarray, x) -> float | np.ndarray:
    return float(values[0]) if np.ndim(x) <= 1 and values.size == 1 else values


def posterior_mean(state: HeteroGPState, x):
    """Posterior mean; a float for a single point, an array for a batch."""
    mean, _ = state.predict(x)
    return _scalar_or_array(mean, x)


def posterior_var(state: HeteroGPState, x):
    _, var = state.predict(x)
    return _scalar_or_array(var, x)


def log_det_ratio(state: HeteroGPState) -> float:
    """``log det(K + lam*S) - log det(lam*S)`` from the cached factor."""
    if state.n == 0:
        return 0.0
    logdet_a = 2.0 * float(np.sum(np.log(np.diag(state.chol))))
    return logdet_a - float(np.sum(np.log(state.lam * state.noise_diag)))


class BetaMode(str, enum.Enum):
    FIXED = "fixed"
    THEORETICAL = "theoretical"


@dataclass(frozen=True)
class BetaSchedule:
    mode: BetaMode = BetaMode.FIXED
    fixed_value: float = 2.0
    delta: float = 0.05
    rkhs_bound: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", BetaMode(str(getattr(self.mode, "value", self.mode)).lower()))
        except ValueError:
            raise InputError(f"unknown beta mode {self.mode!r}") from None
        if not self.fixed_value > 0:
            raise InputError("beta fixed_value must be > 0")
        if not 0 < self.delta < 1:
            raise InputError("beta delta must lie in (0, 1)")
        if not self.rkhs_bound > 0:
            raise InputError("beta rkhs_bound must be > 0")
        if not self.lam > 0:
            raise InputError("beta lambda must be > 0")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "fixed_value": self.fixed_value,
            "delta": self.delta,
            "rkhs_bound": self.rkhs_bound,
            "lambda": self.lam,
        }


def beta_theoretical(state: HeteroGPState, schedule: BetaSchedule) -> float:
    """Confidence multiplier for ``|mean - f| <= beta * std``.

    In fixed mode the configured constant is returned. Otherwise
    ``sqrt(2 ln(1/delta) + log_det_ratio) + sqrt(lam) * B``.
    """
    if schedule.mode is BetaMode.FIXED:
        return float(schedule.fixed_value)
    inner = 2.0 * math.log(1.0 / schedule.delta) + log_det_ratio(state)
    return math.sqrt(max(inner, 0.0)) + math.sqrt(state.lam) * schedule.rkhs_bound


def log_marginal_likelihood(state: HeteroGPState) -> float:
    """Gaussian log evidence of ``y`` under ``N(0, K / lam + diag(noise))``."""
    n = state.n
    if n == 0:
        raise InputError("log marginal likelihood needs at least one observation")
    lam = state.lam
    logdet_a = 2.0 * float(np.sum(np.log(np.diag(state.chol))))
    logdet_c = logdet_a - n * math.log(lam)
    quad = lam * float(state.y @ state.weights)
    return -0.5 * quad - 0.5 * logdet_c - 0.5 * n * math.log(2.0 * math.pi)


LENGTHSCALE_RANGE = (1e-2, 1e1)
OUTPUT_SCALE_RANGE = (1e-1, 1e1)


def fit_hyperparameters(
    kernel_family,
    X,
    y,
    noise_diag,
    budget: int = 128,
    rng_seed: int = 0,
    lam: float = 1.0,
) -> KernelSpec:
    """Seeded random search over lengthscales and output scale.

    Candidates are log-uniform in ``LENGTHSCALE_RANGE`` (per dimension) and
    ``OUTPUT_SCALE_RANGE``; the one with the largest log marginal likelihood
    wins, ties going to the earliest sample.
    """
    family = parse_family(kernel_family)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 2:
        raise InputError("hyperparameter fitting needs at least two observations")
    if budget < 1:
        raise InputError("budget must be >= 1")
    d = X.shape[1]
    rng = np.random.default_rng(rng_seed)
    lo, hi = np.log(LENGTHSCALE_RANGE)
    log_ls = rng.uniform(lo, hi, size=(budget, d))
    lo, hi = np.log(OUTPUT_SCALE_RANGE)
    log_os = rng.uniform(lo, hi, size=budget)

    best, best_val = None, -np.inf
    for i in range(budget):
        spec = KernelSpec(family, tuple(np.exp(log_ls[i])), float(np.exp(log_os[i])))
        try:
            val = log_marginal_likelihood(fit(spec, X, y, noise_diag, lam))
        except NumericalError:
            continue
        if np.isfinite(val) and val > best_val:
            best, best_val = spec, val
    if best is None:
        raise NumericalError("no hyperparameter candidate could be factorised")
    return best


def default_kernel(dim: int, family=KernelFamily.MATERN52) -> KernelSpec:
    return KernelSpec(family, (0.2,) * dim, 1.0)
