"""Confidence-bound scores and their maximisation over a candidate grid.

Scores are vectorised: ``x`` may be a single point or an ``(n, d)`` array
of points in the unit cube, and the return value follows the same shape
convention as :func:`rahbo.gp.posterior_mean`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from rahbo.benchmarks import sobol_unit
from rahbo.errors import InputError
from rahbo.gp import HeteroGPState
from rahbo.variance import VarianceModelState


def _out(values: np.ndarray, x):
    return float(values[0]) if np.ndim(x) <= 1 and values.size == 1 else values


def _f_bounds(gp: HeteroGPState, beta: float, x):
    if beta < 0:
        raise InputError("beta must be >= 0")
    mean, var = gp.predict(x)
    width = beta * np.sqrt(var)
    return mean - width, mean + width


def _var_bounds(var_model: VarianceModelState, beta_var: float, x):
    if beta_var < 0:
        raise InputError("beta_var must be >= 0")
    mean, std = var_model.predict(x)
    return mean - beta_var * std, mean + beta_var * std


def ucb_f(gp: HeteroGPState, beta: float, x):
    return _out(_f_bounds(gp, beta, x)[1], x)


def lcb_f(gp: HeteroGPState, beta: float, x):
    return _out(_f_bounds(gp, beta, x)[0], x)


def mv_ucb_known(gp: HeteroGPState, beta: float, alpha: float, rho_sq: Callable, x):
    """Optimistic mean-variance score when the noise variance is known."""
    ucb = _f_bounds(gp, beta, x)[1]
    return _out(ucb - alpha * np.asarray(rho_sq(x), dtype=float).ravel(), x)


def mv_lcb_known(gp: HeteroGPState, beta: float, alpha: float, rho_sq: Callable, x):
    lcb = _f_bounds(gp, beta, x)[0]
    return _out(lcb - alpha * np.asarray(rho_sq(x), dtype=float).ravel(), x)


def mv_ucb(gp: HeteroGPState, var_model: VarianceModelState, beta, beta_var, alpha, x):
    """``ucb_f(x) - alpha * lcb_var(x)``: optimistic in both mean and risk."""
    ucb = _f_bounds(gp, beta, x)[1]
    lcb_var = _var_bounds(var_model, beta_var, x)[0]
    return _out(ucb - alpha * lcb_var, x)


def mv_lcb(gp: HeteroGPState, var_model: VarianceModelState, beta, beta_var, alpha, x):
    """``lcb_f(x) - alpha * ucb_var(x)``: pessimistic in both mean and risk."""
    lcb = _f_bounds(gp, beta, x)[0]
    ucb_var = _var_bounds(var_model, beta_var, x)[1]
    return _out(lcb - alpha * ucb_var, x)


def mv_ucb_plugin(gp: HeteroGPState, var_model: VarianceModelState, beta, alpha, x):
    """``ucb_f(x) - alpha * mean_var(x)``, the learned variance used as if exact."""
    ucb = _f_bounds(gp, beta, x)[1]
    return _out(ucb - alpha * var_model.predict(x)[0], x)


def mv_lcb_plugin(gp: HeteroGPState, var_model: VarianceModelState, beta, alpha, x):
    lcb = _f_bounds(gp, beta, x)[0]
    return _out(lcb - alpha * var_model.predict(x)[0], x)


def uncertainty_sampling_score(var_model: VarianceModelState, x):
    """Posterior standard deviation of the variance model."""
    return _out(var_model.predict(x)[1], x)


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Fixed scrambled-Sobol points in the unit cube."""

    points: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def sobol(cls, d: int, size: int | None = None, seed=None) -> "CandidateSet":
        size = 1000 * d if size is None else size
        return cls(sobol_unit(d, size, seed=seed, scramble=True))


def argmax_candidates(score, cands) -> tuple[np.ndarray, int]:
    """Best candidate and its index; ties go to the lowest index.

    ``score`` is either a callable evaluated on the whole ``(n, d)`` array
    at once or a precomputed vector of scores.
    """
    points = cands.points if isinstance(cands, CandidateSet) else np.asarray(cands, dtype=float)
    if points.shape[0] == 0:
        raise InputError("candidate set is empty")
    values = np.asarray(score(points) if callable(score) else score, dtype=float).ravel()
    if values.size != points.shape[0]:
        raise InputError("score length does not match the candidate count")
    if np.any(np.isnan(values)):
        raise InputError("acquisition scores contain NaN")
    idx = int(np.argmax(values))  # first occurrence of the maximum
    return points[idx].copy(), idx
