"""Optimisation loops: RAHBO, GP-UCB, RAHBO with known variance, RAHBO-US.

All four share one driver. Each run evaluates a Sobol initial design, fits
kernel hyperparameters once on it, then for ``T`` rounds selects a point
from a fixed Sobol candidate grid, draws ``k`` noisy evaluations there and
refits both models. GP inputs live in the unit cube; points handed to the
benchmark and written to traces are in domain coordinates.

Random streams are derived from ``(master_seed, seed, purpose, index)``, so
the initial design, the candidate grid and the noise drawn in round ``t``
are shared by every algorithm run with the same seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rahbo.acquisition import argmax_candidates
from rahbo.benchmarks import Benchmark, sample_observation, sobol_unit
from rahbo.config import REPORT_RULES, ExperimentConfig
from rahbo.errors import InputError
from rahbo.gp import BetaMode, beta_theoretical, fit, fit_hyperparameters
from rahbo.kernel import KernelSpec
from rahbo.metrics import instantaneous_regret, logdet_info_gain, sequential_info_gain
from rahbo.variance import (
    build_hat_sigma,
    eta_variance_proxy,
    init_variance_model,
    sample_stats,
    truncate_hat_sigma,
    update_variance_gp,
)

log = logging.getLogger(__name__)

Sampler = Callable[[Benchmark, np.ndarray, int, np.random.Generator], np.ndarray]

_STREAM_DESIGN, _STREAM_CANDS, _STREAM_HYPER, _STREAM_OBS = range(4)
_PHASE_INIT, _PHASE_US, _PHASE_ROUND = range(3)


def stream(cfg: ExperimentConfig, seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(seed, *key))
    return np.random.default_rng(ss)


@dataclass
class RegretTrace:
    round: int
    x: np.ndarray
    sample_mean: float
    sample_var: float
    mv_true: float
    r_inst: float
    r_cum: float
    r_cum_per_sample: float
    info_gain_f: float = 0.0
    info_gain_var: float = 0.0
    beta_used: float = 0.0
    beta_var_used: float = 0.0


@dataclass
class RunResult:
    algorithm: str
    seed: int
    trace: list[RegretTrace]
    reported_point: np.ndarray
    reported_rule: str
    reports: dict[str, np.ndarray]
    simple_regret_trace: dict[str, np.ndarray]
    config_hash: str
    sampler_calls: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def acquired(self) -> np.ndarray:
        return np.array([row.x for row in self.trace])


class ObjectiveModel:
    """Objective GP on an affinely standardised scale.

    ``shift`` and ``scale`` are frozen from the initial design; predictions
    are returned in the benchmark's own units.
    """

    def __init__(self, kernel: KernelSpec, lam: float, shift: float, scale: float):
        self.kernel, self.lam, self.shift, self.scale = kernel, lam, shift, scale
        self.gp = fit(kernel, np.zeros((0, kernel.dim)), [], [], lam)

    def refit(self, X, means, noise):
        z = (np.asarray(means) - self.shift) / self.scale
        self.gp = fit(self.kernel, X, z, np.asarray(noise) / self.scale**2, self.lam)

    def predict(self, Xq):
        mean, var = self.gp.predict(Xq)
        return self.shift + self.scale * mean, self.scale * np.sqrt(var)


class _Run:
    """State of one seeded run; see :func:`run` for the public entry point."""

    def __init__(self, cfg: ExperimentConfig, bench: Benchmark, seed: int, sampler: Sampler | None):
        if cfg.alpha < 0 or cfg.k < 2 or cfg.T < 1 or cfg.n_init < 1:
            raise InputError("need alpha >= 0, k >= 2, T >= 1 and n_init >= 1")
        self.cfg, self.bench, self.seed = cfg, bench, seed
        self.algo = cfg.algorithm
        self.sampler = sampler or sample_observation
        self.calls = 0
        self.d = bench.dim
        self.k = cfg.k
        self.var_lo, self.var_hi = cfg.bounds_lo, cfg.bounds_hi
        self.eta = eta_variance_proxy(self.var_hi, self.k)
        self.X = np.zeros((0, self.d))
        self.means = np.zeros(0)
        self.vars = np.zeros(0)
        self.cands = sobol_unit(self.d, cfg.grid_size, seed=stream(cfg, seed, _STREAM_CANDS), scramble=True)
        self.cand_rho = bench.rho_sq(bench.from_unit(self.cands))
        self.uses_var_model = self.algo != "rahbo_known"
        if cfg.beta.mode is BetaMode.THEORETICAL and isinstance(cfg.kernel_f, KernelSpec) and cfg.kernel_f.output_scale > 1:
            log.warning("theoretical beta assumes k(x, x) <= 1 but kernel_f.output_scale > 1")

    # -- observations -------------------------------------------------
    def observe(self, u: np.ndarray, phase: int, index: int):
        rng = stream(self.cfg, self.seed, _STREAM_OBS, phase, index)
        samples = np.asarray(self.sampler(self.bench, self.bench.from_unit(u), self.k, rng), dtype=float)
        self.calls += samples.size
        m, s2 = sample_stats(samples)
        self.X = np.vstack([self.X, u[None, :]])
        self.means = np.append(self.means, m)
        self.vars = np.append(self.vars, s2)
        return m, s2

    # -- models -------------------------------------------------------
    def fit_kernels(self, tag: int):
        cfg = self.cfg
        if self.uses_var_model:
            if cfg.kernel_var == "fit":
                self.kernel_var = fit_hyperparameters(
                    cfg.kernel_family, self.X, self.vars, np.full(self.X.shape[0], self.eta),
                    cfg.hyper_budget, stream(cfg, self.seed, _STREAM_HYPER, 0, tag), cfg.lam,
                )
            else:
                self.kernel_var = cfg.kernel_var
            self.var_model = init_variance_model(
                self.kernel_var, self.var_lo, self.var_hi, self.k, cfg.lam, self.eta, self.X, self.vars
            )
        noise = self.noise_for_objective()
        if cfg.kernel_f == "fit":
            z = (self.means - self.shift) / self.scale
            self.kernel_f = fit_hyperparameters(
                cfg.kernel_family, self.X, z, noise / self.scale**2,
                cfg.hyper_budget, stream(cfg, self.seed, _STREAM_HYPER, 1, tag), cfg.lam,
            )
        else:
            self.kernel_f = cfg.kernel_f
        self.obj = ObjectiveModel(self.kernel_f, cfg.lam, self.shift, self.scale)
        self.obj.refit(self.X, self.means, noise)

    def beta_var(self) -> float:
        if not self.uses_var_model:
            return 0.0
        return beta_theoretical(self.var_model.gp, self.cfg.beta_var)

    def noise_for_objective(self) -> np.ndarray:
        if self.algo == "rahbo_known":
            rho = self.bench.rho_sq(self.bench.from_unit(self.X))
            return truncate_hat_sigma(rho, self.var_lo, self.var_hi, self.k)
        return build_hat_sigma(self.var_model, self.X, self.beta_var())

    def update_models(self, u: np.ndarray, s2: float):
        if self.uses_var_model:
            self.var_model = update_variance_gp(self.var_model, u, s2)
        self.obj.refit(self.X, self.means, self.noise_for_objective())

    # -- scores -------------------------------------------------------
    def risk_terms(self, U, rho_true, optimistic: bool, beta_var: float):
        """Variance penalty per point, before multiplication by alpha."""
        if self.algo == "gp_ucb":
            return np.zeros(U.shape[0])
        if self.algo == "rahbo_known":
            return rho_true
        mean_v, sd_v = self.var_model.predict(U)
        if self.algo == "rahbo_us":
            return mean_v
        return mean_v - beta_var * sd_v if optimistic else mean_v + beta_var * sd_v

    def alpha_eff(self) -> float:
        return 0.0 if self.algo == "gp_ucb" else self.cfg.alpha

    def lcb_mv(self, U, rho_true, beta, beta_var) -> np.ndarray:
        mean_f, sd_f = self.obj.predict(U)
        return mean_f - beta * sd_f - self.alpha_eff() * self.risk_terms(U, rho_true, False, beta_var)

    # -- main loop ----------------------------------------------------
    def execute(self) -> RunResult:
        cfg, bench = self.cfg, self.bench
        design = sobol_unit(self.d, cfg.n_init, seed=stream(cfg, self.seed, _STREAM_DESIGN), scramble=True)
        for i, u in enumerate(design):
            self.observe(u, _PHASE_INIT, i)
        if cfg.standardize:
            self.shift = float(np.mean(self.means))
            sd = float(np.std(self.means))
            self.scale = sd if sd > 1e-12 else 1.0
        else:
            self.shift, self.scale = 0.0, 1.0
        self.fit_kernels(tag=0)

        if self.algo == "rahbo_us":
            for j in range(cfg.n_us):
                _, sd_v = self.var_model.predict(self.cands)
                _, idx = argmax_candidates(sd_v, self.cands)
                u = self.cands[idx]
                _, s2 = self.observe(u, _PHASE_US, j)
                self.update_models(u, s2)
        n_pre = self.X.shape[0]

        alpha = self.alpha_eff()
        mv_opt = bench.mv_optimum(cfg.alpha)
        trace: list[RegretTrace] = []
        lcb_at_selection: list[float] = []
        reports_t: dict[str, list[np.ndarray]] = {r: [] for r in REPORT_RULES}
        r_cum = 0.0
        for t in range(1, cfg.T + 1):
            beta = beta_theoretical(self.obj.gp, cfg.beta)
            beta_var = self.beta_var()
            mean_f, sd_f = self.obj.predict(self.cands)
            score = mean_f + beta * sd_f
            if alpha != 0.0:
                score = score - alpha * self.risk_terms(self.cands, self.cand_rho, True, beta_var)
            _, idx = argmax_candidates(score, self.cands)
            u = self.cands[idx]
            lcb_at_selection.append(
                float(self.lcb_mv(u[None, :], self.cand_rho[idx : idx + 1], beta, beta_var)[0])
            )

            m, s2 = self.observe(u, _PHASE_ROUND, t)
            self.update_models(u, s2)
            if cfg.refit_every and t % cfg.refit_every == 0:
                self.fit_kernels(tag=t)

            x = bench.from_unit(u)
            mv_true = float(bench.mv(x, cfg.alpha)[0])
            r = instantaneous_regret(bench, cfg.alpha, x)
            r_cum += r
            trace.append(
                RegretTrace(t, x, m, s2, mv_true, r, r_cum, cfg.k * r_cum, beta_used=beta, beta_var_used=beta_var)
            )
            self.record_reports(reports_t, n_pre, lcb_at_selection)

        self.fill_info_gains(trace, n_pre)
        simple = {
            rule: np.array([instantaneous_regret(bench, cfg.alpha, p) for p in pts])
            for rule, pts in reports_t.items()
        }
        reports = {rule: pts[-1] for rule, pts in reports_t.items()}
        log.debug("seed %d %s: final cumulative regret %.4f", self.seed, self.algo, r_cum)
        return RunResult(
            algorithm=self.algo,
            seed=self.seed,
            trace=trace,
            reported_point=reports[cfg.report_rule],
            reported_rule=cfg.report_rule,
            reports=reports,
            simple_regret_trace=simple,
            config_hash=cfg.config_hash(),
            sampler_calls=self.calls,
            diagnostics=self.diagnostics,
        )

    def record_reports(self, reports_t, n_pre, lcb_at_selection):
        cfg = self.cfg
        U = self.X[n_pre:]
        pts = self.bench.from_unit(U)
        beta = beta_theoretical(self.obj.gp, cfg.beta)
        rho = self.bench.rho_sq(pts)
        scores = {
            "lcb_mv": self.lcb_mv(U, rho, beta, self.beta_var()),
            "lcb_mv_per_round": np.asarray(lcb_at_selection),
            "best_observed": self.means[n_pre:],
            "max_empirical_mv": self.means[n_pre:] - cfg.alpha * self.vars[n_pre:],
        }
        for rule, s in scores.items():
            reports_t[rule].append(report_point(s, pts, rule))

    def fill_info_gains(self, trace, n_pre):
        """Cumulative information gains along the visited sequence.

        The objective gain uses the homoscedastic noise ``var_hi / k`` and
        the variance gain uses the sample-variance noise proxy.
        """
        cfg = self.cfg
        noise_f = self.var_hi / self.k / self.scale**2
        gain_f = sequential_info_gain(self.kernel_f, self.X, noise_f, cfg.lam)
        diag = {
            "gain_f_sum": float(gain_f[-1]),
            "gain_f_logdet": logdet_info_gain(self.kernel_f, self.X, noise_f, cfg.lam),
        }
        if self.uses_var_model:
            gain_v = sequential_info_gain(self.kernel_var, self.X, self.eta, cfg.lam)
            diag["gain_var_sum"] = float(gain_v[-1])
            diag["gain_var_logdet"] = logdet_info_gain(self.kernel_var, self.X, self.eta, cfg.lam)
        else:
            gain_v = np.zeros(self.X.shape[0])
        rho = self.bench.rho_sq(self.bench.from_unit(self.X)) / self.k / self.scale**2
        diag["gain_hetero"] = logdet_info_gain(self.kernel_f, self.X, rho, cfg.lam)
        diag["gain_homo"] = logdet_info_gain(self.kernel_f, self.X, noise_f, cfg.lam)
        diag["gain_ratio_bound"] = self.var_hi / self.var_lo if self.var_lo > 0 else float("inf")
        diag["kernel_f"] = self.kernel_f.to_dict()
        if self.uses_var_model:
            diag["kernel_var"] = self.kernel_var.to_dict()
        diag["standardize_shift"] = self.shift
        diag["standardize_scale"] = self.scale
        self.diagnostics = diag
        for row in trace:
            row.info_gain_f = float(gain_f[n_pre + row.round - 1])
            row.info_gain_var = float(gain_v[n_pre + row.round - 1])


def run(cfg: ExperimentConfig, seed: int, sampler: Sampler | None = None, bench: Benchmark | None = None) -> RunResult:
    """Execute ``cfg.algorithm`` for one seed."""
    return _Run(cfg, bench or cfg.bench, seed, sampler).execute()


def run_rahbo(cfg, seed, sampler=None, bench=None) -> RunResult:
    return run(cfg.with_(algorithm="rahbo"), seed, sampler, bench)


def run_gp_ucb(cfg, seed, sampler=None, bench=None) -> RunResult:
    return run(cfg.with_(algorithm="gp_ucb"), seed, sampler, bench)


def run_rahbo_known(cfg, seed, sampler=None, bench=None) -> RunResult:
    return run(cfg.with_(algorithm="rahbo_known"), seed, sampler, bench)


def run_rahbo_us(cfg, seed, sampler=None, bench=None) -> RunResult:
    return run(cfg.with_(algorithm="rahbo_us"), seed, sampler, bench)


def report_point(scores, visited, rule: str = "lcb_mv"):
    """Visited point with the highest score; ties go to the earliest visit.

    ``scores`` holds one value per visited point, computed by the caller for
    ``rule`` (e.g. final-model lcb of the mean-variance objective, or the
    observed sample mean).
    """
    if rule not in REPORT_RULES:
        raise InputError(f"unknown reporting rule {rule!r}")
    visited = np.asarray(visited, dtype=float)
    if visited.shape[0] == 0:
        raise InputError("cannot report from an empty set of visited points")
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size != visited.shape[0]:
        raise InputError("one score per visited point is required")
    return visited[int(np.argmax(scores))].copy()
