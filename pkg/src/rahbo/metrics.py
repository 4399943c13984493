"""Mean-variance values, regret, information gain and cross-run summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rahbo.benchmarks import Benchmark
from rahbo.errors import InputError
from rahbo.gp import fit, log_det_ratio
from rahbo.kernel import KernelSpec


def mv_value(bench: Benchmark, alpha: float, x):
    """``f(x) - alpha * rho_sq(x)``."""
    X = bench.check_points(x)
    vals = bench.mv(X, alpha)
    return float(vals[0]) if np.ndim(x) <= 1 and vals.size == 1 else vals


def instantaneous_regret(bench: Benchmark, alpha: float, x):
    X = bench.check_points(x)
    r = np.maximum(bench.mv_optimum(alpha) - bench.mv(X, alpha), 0.0)
    return float(r[0]) if np.ndim(x) <= 1 and r.size == 1 else r


def simple_regret(bench: Benchmark, alpha: float, reported) -> float:
    return instantaneous_regret(bench, alpha, reported)


def info_gain_step(sigma_prev_sq: float, noise_var: float) -> float:
    """Mutual information added by one observation: ``0.5 ln(1 + s2/noise)``."""
    if not noise_var > 0:
        raise InputError("noise_var must be > 0")
    if sigma_prev_sq < 0:
        raise InputError("sigma_prev_sq must be >= 0")
    return 0.5 * math.log1p(sigma_prev_sq / noise_var)


def sequential_info_gain(kernel: KernelSpec, X, noise, lam: float = 1.0) -> np.ndarray:
    """Cumulative information gain after each point of the sequence ``X``.

    Entry ``t`` sums the one-step gains of points ``0..t``, each using the
    posterior variance given the points before it.
    """
    X = np.asarray(X, dtype=float).reshape(-1, kernel.dim)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (X.shape[0],))
    out = np.empty(X.shape[0])
    total = 0.0
    for t in range(X.shape[0]):
        gp = fit(kernel, X[:t], np.zeros(t), noise[:t], lam)
        s2 = float(gp.predict(X[t : t + 1])[1][0])
        total += info_gain_step(s2, float(noise[t]))
        out[t] = total
    return out


def logdet_info_gain(kernel: KernelSpec, X, noise, lam: float = 1.0) -> float:
    """``0.5 (log det(K + lam S) - log det(lam S))`` for the whole sequence."""
    X = np.asarray(X, dtype=float).reshape(-1, kernel.dim)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (X.shape[0],))
    return 0.5 * log_det_ratio(fit(kernel, X, np.zeros(X.shape[0]), noise, lam))


def hetero_homo_gain_check(kernel: KernelSpec, X, rho_sq, var_lo: float, var_hi: float, lam: float = 1.0):
    """Information gain under true heteroscedastic noise vs. the homoscedastic bound.

    Returns ``(gain_hetero, gain_homo, ratio_bound)`` where the inequality
    ``gain_hetero <= (var_hi / var_lo) * gain_homo`` is expected to hold.
    """
    gain_hetero = logdet_info_gain(kernel, X, rho_sq, lam)
    gain_homo = logdet_info_gain(kernel, X, var_hi, lam)
    return gain_hetero, gain_homo, var_hi / var_lo


@dataclass
class Band:
    mean: np.ndarray
    se: np.ndarray

    @property
    def lo(self) -> np.ndarray:
        return self.mean - 2.0 * self.se

    @property
    def hi(self) -> np.ndarray:
        return self.mean + 2.0 * self.se


def mean_se(values) -> Band:
    """Mean and standard error over axis 0 (runs)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise InputError("need at least two runs to compute a standard error")
    mean = values.mean(axis=0)
    se = values.std(axis=0, ddof=1) / math.sqrt(n)
    return Band(mean, se)


def aggregate(results) -> dict[str, Band]:
    """Per-round mean and standard error bands across runs.

    Keys: ``r_cum``, ``r_cum_per_sample``, and ``simple_<rule>`` for every
    reporting rule recorded in the runs.
    """
    results = list(results)
    if len(results) < 2:
        raise InputError("aggregate needs at least two runs")
    T = {len(r.trace) for r in results}
    if len(T) != 1:
        raise InputError(f"runs have different numbers of rounds: {sorted(T)}")
    out = {
        "r_cum": mean_se([[row.r_cum for row in r.trace] for r in results]),
        "r_cum_per_sample": mean_se([[row.r_cum_per_sample for row in r.trace] for r in results]),
    }
    rules = sorted(set.intersection(*(set(r.simple_regret_trace) for r in results)))
    for rule in rules:
        out[f"simple_{rule}"] = mean_se([r.simple_regret_trace[rule] for r in results])
    return out
