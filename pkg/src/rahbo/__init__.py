"""Risk-averse Bayesian optimization under heteroscedastic noise.

Heteroscedastic GP regression, the mean-variance UCB family of
acquisition rules, synthetic benchmarks with known noise variance, and a
seeded experiment harness that records risk-averse regret.
"""

from rahbo.kernel import KernelSpec, eval_kernel, kernel_matrix, kernel_vector
from rahbo.gp import (
    BetaSchedule,
    HeteroGPState,
    beta_theoretical,
    fit,
    fit_hyperparameters,
    log_marginal_likelihood,
    posterior_mean,
    posterior_var,
)
from rahbo.benchmarks import Benchmark, branin_benchmark, get_benchmark, sine_benchmark
from rahbo.errors import InputError, NumericalError

__version__ = "0.1.0"

__all__ = [
    "BetaSchedule",
    "Benchmark",
    "HeteroGPState",
    "InputError",
    "KernelSpec",
    "NumericalError",
    "beta_theoretical",
    "branin_benchmark",
    "eval_kernel",
    "fit",
    "fit_hyperparameters",
    "get_benchmark",
    "kernel_matrix",
    "kernel_vector",
    "log_marginal_likelihood",
    "posterior_mean",
    "posterior_var",
    "sine_benchmark",
]
