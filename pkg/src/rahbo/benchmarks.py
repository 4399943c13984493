"""Synthetic objectives with a known, input-dependent noise variance.

Each benchmark provides the true mean ``f`` and the true noise variance
``rho_sq`` on a box domain, so regret can be computed exactly. Noise is
Gaussian. Constants of the variance functions are our own choice: the
sine problem is quiet on ``[0, 1]`` and loud on ``(1, 2]``, and the three
Branin maximisers are ordered noisiest to quietest from left to right.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.special import expit
from scipy.stats import qmc

from rahbo.errors import InputError


@dataclass(frozen=True, eq=False)
class Benchmark:
    name: str
    bounds: np.ndarray  # shape (d, 2)
    f: Callable[[np.ndarray], np.ndarray]
    rho_sq: Callable[[np.ndarray], np.ndarray]
    analytic_optima: np.ndarray  # shape (m, d)
    var_lo: float
    var_hi: float
    _mv_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    def check_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim <= 1:
            X = X.reshape(-1, self.dim) if self.dim == 1 else X.reshape(1, -1)
        if X.shape[-1] != self.dim:
            raise InputError(f"{self.name}: expected dimension {self.dim}, got {X.shape[-1]}")
        tol = 1e-9 * (self.bounds[:, 1] - self.bounds[:, 0])
        if np.any(X < self.bounds[:, 0] - tol) or np.any(X > self.bounds[:, 1] + tol):
            raise InputError(f"{self.name}: point outside the domain {self.bounds.tolist()}")
        return X

    def to_unit(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - self.bounds[:, 0]) / (self.bounds[:, 1] - self.bounds[:, 0])

    def from_unit(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        return self.bounds[:, 0] + U * (self.bounds[:, 1] - self.bounds[:, 0])

    def dense_grid(self, per_dim: int | None = None) -> np.ndarray:
        """Regular grid with about ``10**4 * d`` points over the domain."""
        d = self.dim
        if per_dim is None:
            per_dim = int(math.ceil((1e4 * d) ** (1.0 / d)))
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in self.bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def mv(self, X, alpha: float) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        return self.f(X) - alpha * self.rho_sq(X)

    def mv_argmax(self, alpha: float) -> tuple[np.ndarray, float]:
        """Maximiser and maximum of ``f - alpha * rho_sq``.

        Takes the best of a dense grid and the analytic optima, then polishes
        the five best starting points with bounded L-BFGS-B.
        """
        key = float(alpha)
        if key in self._mv_cache:
            x, v = self._mv_cache[key]
            return x.copy(), v
        cands = np.vstack([self.dense_grid(), self.analytic_optima])
        vals = self.mv(cands, alpha)
        order = np.argsort(-vals, kind="stable")[:5]
        best_x, best_v = cands[order[0]].copy(), float(vals[order[0]])
        for i in order:
            res = optimize.minimize(
                lambda z: -float(self.mv(z, alpha)[0]),
                cands[i],
                method="L-BFGS-B",
                bounds=[tuple(b) for b in self.bounds],
            )
            if -res.fun > best_v:
                best_x, best_v = np.clip(res.x, self.bounds[:, 0], self.bounds[:, 1]), -float(res.fun)
        self._mv_cache[key] = (best_x, best_v)
        return best_x.copy(), best_v

    def mv_optimum(self, alpha: float) -> float:
        return self.mv_argmax(alpha)[1]


def _sine_f(X):
    X = np.asarray(X, dtype=float).reshape(-1, 1)
    return np.sin(2.0 * np.pi * X[:, 0])


def _sine_rho_sq(X):
    X = np.asarray(X, dtype=float).reshape(-1, 1)
    return 0.02 + 0.78 * expit(20.0 * (X[:, 0] - 1.0))


def sine_benchmark() -> Benchmark:
    """``sin(2 pi x)`` on ``[0, 2]``; maxima at 0.25 (quiet) and 1.25 (loud)."""
    return Benchmark(
        name="sine",
        bounds=np.array([[0.0, 2.0]]),
        f=_sine_f,
        rho_sq=_sine_rho_sq,
        analytic_optima=np.array([[0.25], [1.25]]),
        var_lo=0.02,
        var_hi=0.8,
    )


_BR_A = 1.0
_BR_B = 5.1 / (4.0 * np.pi**2)
_BR_C = 5.0 / np.pi
_BR_R = 6.0
_BR_S = 10.0
_BR_T = 1.0 / (8.0 * np.pi)


def _branin_f(X):
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    x1, x2 = X[:, 0], X[:, 1]
    val = _BR_A * (x2 - _BR_B * x1**2 + _BR_C * x1 - _BR_R) ** 2
    val += _BR_S * (1.0 - _BR_T) * np.cos(x1) + _BR_S
    return -val


def _branin_rho_sq(X):
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    return 0.05 + 1.5 * expit(-1.5 * (X[:, 0] - 2.5))


def branin_benchmark() -> Benchmark:
    """Negated Branin on ``[-5, 10] x [0, 15]`` with noise decreasing in ``x1``."""
    optima = np.array([[-np.pi, 12.275], [np.pi, 2.275], [3.0 * np.pi, 2.475]])
    return Benchmark(
        name="branin",
        bounds=np.array([[-5.0, 10.0], [0.0, 15.0]]),
        f=_branin_f,
        rho_sq=_branin_rho_sq,
        analytic_optima=optima,
        var_lo=0.05,
        var_hi=1.55,
    )


BENCHMARKS: dict[str, Callable[[], Benchmark]] = {
    "sine": sine_benchmark,
    "branin": branin_benchmark,
}


@functools.lru_cache(maxsize=None)
def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]()
    except KeyError:
        raise InputError(f"unknown benchmark {name!r}; available: {sorted(BENCHMARKS)}") from None


def sample_observation(bench: Benchmark, x, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` noisy evaluations ``f(x) + eps`` with ``eps ~ N(0, rho_sq(x))``."""
    if k < 1:
        raise InputError("k must be >= 1")
    X = bench.check_points(x)
    if X.shape[0] != 1:
        raise InputError("sample_observation takes a single point")
    mean = float(bench.f(X)[0])
    sd = math.sqrt(float(bench.rho_sq(X)[0]))
    return mean + sd * rng.standard_normal(k)


def sobol_unit(d: int, n: int, seed=None, scramble: bool = True) -> np.ndarray:
    """First ``n`` Sobol points in ``[0, 1)^d``.

    The unscrambled sequence skips its leading all-zero point, so the first
    point returned is ``(0.5, ..., 0.5)``.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    skip = 0 if scramble else 1
    m = max(0, int(math.ceil(math.log2(n + skip))))
    engine = qmc.Sobol(d, scramble=scramble, seed=seed)
    return engine.random_base2(m)[skip : skip + n]


def sobol_design(bounds, n: int, seed=None, scramble: bool = True) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    U = sobol_unit(bounds.shape[0], n, seed, scramble)
    return bounds[:, 0] + U * (bounds[:, 1] - bounds[:, 0])
