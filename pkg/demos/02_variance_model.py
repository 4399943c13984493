"""Learning the noise variance from repeated evaluations.

Each query is evaluated k times. The sample variance of the repeats is an
unbiased but noisy observation of the noise variance; a GP fitted to those
observations gives upper bounds that are capped and divided by k to form
the noise matrix of the objective GP.

    python demos/02_variance_model.py
"""

import numpy as np

from rahbo.benchmarks import sample_observation, sine_benchmark
from rahbo.kernel import KernelSpec
from rahbo.variance import build_hat_sigma, eta_variance_proxy, init_variance_model, sample_stats

bench = sine_benchmark()
rng = np.random.default_rng(0)
k = 10

X = np.linspace(0.05, 1.95, 12)[:, None]
stats = [sample_stats(sample_observation(bench, x, k, rng)) for x in X]
svars = np.array([v for _, v in stats])

eta = eta_variance_proxy(bench.var_hi, k)
print(f"noise level of a sample variance (k={k}): eta = {eta:.4f}")

# the GP works on the unit interval
U = bench.to_unit(X)
model = init_variance_model(KernelSpec("matern52", (0.3,)), bench.var_lo, bench.var_hi, k, X=U, sample_vars=svars)

grid = np.linspace(0, 2, 9)[:, None]
mean, sd = model.predict(bench.to_unit(grid))
truth = bench.rho_sq(grid)
print("\n    x   true rho2   model mean   +-2 sd")
for x, t, m, s in zip(grid[:, 0], truth, mean, sd):
    print(f"  {x:4.2f}   {t:8.4f}   {m:10.4f}   {2 * s:.4f}")

hat = build_hat_sigma(model, U, beta_var=2.0)
print("\nnoise variances handed to the objective GP (upper bound, capped, / k):")
print("  " + " ".join(f"{v:.3f}" for v in hat))
