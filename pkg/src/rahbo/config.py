"""Experiment configuration: JSON schema, validation and canonical hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from rahbo.benchmarks import BENCHMARKS, get_benchmark
from rahbo.errors import InputError
from rahbo.gp import BetaSchedule
from rahbo.kernel import KernelSpec, parse_family

ALGORITHMS = ("rahbo", "gp_ucb", "rahbo_known", "rahbo_us")
REPORT_RULES = ("lcb_mv", "lcb_mv_per_round", "best_observed", "max_empirical_mv")


class ConfigError(InputError):
    """Configuration problems, all of them at once."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    algorithm: str
    T: int
    alpha: float = 1.0
    k: int = 10
    n_init: int = 10
    n_us: int = 10
    lam: float = 1.0
    beta: BetaSchedule = field(default_factory=BetaSchedule)
    beta_var: BetaSchedule = field(default_factory=BetaSchedule)
    kernel_f: KernelSpec | str = "fit"
    kernel_var: KernelSpec | str = "fit"
    kernel_family: str = "matern52"
    hyper_budget: int = 128
    refit_every: int = 0
    candidate_grid: int | None = None
    var_lo: float | None = None
    var_hi: float | None = None
    standardize: bool = True
    report_rule: str = "lcb_mv"
    seeds: tuple[int, ...] = (0,)
    master_seed: int = 0
    output_dir: str | None = None

    @property
    def bench(self):
        return get_benchmark(self.benchmark)

    @property
    def grid_size(self) -> int:
        return self.candidate_grid or 1000 * self.bench.dim

    @property
    def bounds_lo(self) -> float:
        return self.bench.var_lo if self.var_lo is None else self.var_lo

    @property
    def bounds_hi(self) -> float:
        return self.bench.var_hi if self.var_hi is None else self.var_hi

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Normalised JSON-ready form; defaults are filled in explicitly."""
        d = {
            "benchmark": self.benchmark,
            "algorithm": self.algorithm,
            "T": self.T,
            "alpha": self.alpha,
            "k": self.k,
            "n_init": self.n_init,
            "n_us": self.n_us,
            "lambda": self.lam,
            "beta": _beta_dict(self.beta),
            "beta_var": _beta_dict(self.beta_var),
            "kernel_f": self.kernel_f.to_dict() if isinstance(self.kernel_f, KernelSpec) else self.kernel_f,
            "kernel_var": self.kernel_var.to_dict() if isinstance(self.kernel_var, KernelSpec) else self.kernel_var,
            "kernel_family": self.kernel_family,
            "hyper_budget": self.hyper_budget,
            "refit_every": self.refit_every,
            "candidate_grid": self.grid_size,
            "var_lo": self.bounds_lo,
            "var_hi": self.bounds_hi,
            "standardize": self.standardize,
            "report_rule": self.report_rule,
            "seeds": list(self.seeds),
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
        }
        return d

    def semantic_dict(self) -> dict:
        d = self.to_dict()
        d.pop("output_dir")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _beta_dict(b: BetaSchedule) -> dict:
    d = b.to_dict()
    d.pop("lambda")
    return d


_FIELD_KEYS = {
    "benchmark", "algorithm", "T", "alpha", "k", "n_init", "n_us", "lambda",
    "beta", "beta_var", "kernel_f", "kernel_var", "kernel_family", "hyper_budget",
    "refit_every", "candidate_grid", "var_lo", "var_hi", "standardize",
    "report_rule", "seeds", "master_seed", "output_dir",
}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def config_from_dict(raw: dict, line_of=None) -> ExperimentConfig:
    """Validate ``raw`` and build a config; raises :class:`ConfigError`."""
    line_of = line_of or (lambda key: None)
    errors: list[str] = []

    def err(key: str, msg: str):
        line = line_of(key)
        where = f"line {line}: " if line else ""
        errors.append(f"{where}{key}: {msg}")

    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    for key in sorted(set(raw) - _FIELD_KEYS):
        err(key, "unknown field")

    bench = raw.get("benchmark")
    if bench is None:
        err("benchmark", "required")
    elif bench not in BENCHMARKS:
        err("benchmark", f"unknown benchmark {bench!r}; choose from {sorted(BENCHMARKS)}")
    algo = raw.get("algorithm")
    if algo is None:
        err("algorithm", "required")
    elif algo not in ALGORITHMS:
        err("algorithm", f"must be one of {list(ALGORITHMS)}")

    def int_field(key, default, minimum, why=""):
        v = raw.get(key, default)
        if v is None:
            err(key, "required")
            return None
        if not _is_int(v):
            err(key, "must be an integer")
            return None
        if v < minimum:
            err(key, f"must be >= {minimum}{why}")
        return v

    def num_field(key, default, check, msg):
        v = raw.get(key, default)
        if not _is_num(v):
            err(key, "must be a number")
            return None
        if not check(v):
            err(key, msg)
        return float(v)

    T = int_field("T", None, 1)
    k = int_field("k", 10, 2, " (a sample variance needs at least two repeats)")
    n_init = int_field("n_init", 10, 1)
    n_us = int_field("n_us", 10, 0)
    hyper_budget = int_field("hyper_budget", 128, 1)
    refit_every = int_field("refit_every", 0, 0)
    master_seed = int_field("master_seed", 0, 0)
    alpha = num_field("alpha", 1.0, lambda v: v >= 0, "must be >= 0 (risk tolerance is nonnegative)")
    lam = num_field("lambda", 1.0, lambda v: v > 0, "must be > 0")

    grid = raw.get("candidate_grid")
    if grid is not None and (not _is_int(grid) or grid < 1):
        err("candidate_grid", "must be a positive integer or null")

    var_lo, var_hi = raw.get("var_lo"), raw.get("var_hi")
    for key, v in (("var_lo", var_lo), ("var_hi", var_hi)):
        if v is not None and (not _is_num(v) or v < 0):
            err(key, "must be a nonnegative number or null")
    if bench in BENCHMARKS and all(v is None or _is_num(v) for v in (var_lo, var_hi)):
        b = get_benchmark(bench)
        lo = b.var_lo if var_lo is None else var_lo
        hi = b.var_hi if var_hi is None else var_hi
        if not 0 <= lo < hi:
            err("var_hi", f"need 0 <= var_lo < var_hi, got {lo} and {hi}")

    betas = {}
    for key in ("beta", "beta_var"):
        v = raw.get(key, {})
        if not isinstance(v, dict):
            err(key, "must be an object")
            continue
        unknown = set(v) - {"mode", "fixed_value", "delta", "rkhs_bound"}
        if unknown:
            err(key, f"unknown fields {sorted(unknown)}")
            continue
        try:
            betas[key] = BetaSchedule(lam=lam if lam and lam > 0 else 1.0, **v)
        except (InputError, TypeError) as e:
            err(key, str(e))

    family = raw.get("kernel_family", "matern52")
    try:
        family = parse_family(family).value
    except InputError as e:
        err("kernel_family", str(e))
    kernels = {}
    for key in ("kernel_f", "kernel_var"):
        v = raw.get(key, "fit")
        if v == "fit":
            kernels[key] = "fit"
        elif isinstance(v, dict):
            try:
                spec = KernelSpec.from_dict(v)
            except (InputError, KeyError, TypeError) as e:
                err(key, f"invalid kernel spec: {e}")
                continue
            if bench in BENCHMARKS and spec.dim != get_benchmark(bench).dim:
                err(key, f"needs {get_benchmark(bench).dim} lengthscales")
            kernels[key] = spec
        else:
            err(key, 'must be "fit" or a kernel object')

    standardize = raw.get("standardize", True)
    if not isinstance(standardize, bool):
        err("standardize", "must be true or false")
    rule = raw.get("report_rule", "lcb_mv")
    if rule not in REPORT_RULES:
        err("report_rule", f"must be one of {list(REPORT_RULES)}")

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        err("seeds", "must be a non-empty list of nonnegative integers")
    elif len(set(seeds)) != len(seeds):
        err("seeds", "must be distinct")

    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        err("output_dir", "must be a string path")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        benchmark=bench,
        algorithm=algo,
        T=T,
        alpha=alpha,
        k=k,
        n_init=n_init,
        n_us=n_us,
        lam=lam,
        beta=betas["beta"],
        beta_var=betas["beta_var"],
        kernel_f=kernels["kernel_f"],
        kernel_var=kernels["kernel_var"],
        kernel_family=family,
        hyper_budget=hyper_budget,
        refit_every=refit_every,
        candidate_grid=grid,
        var_lo=var_lo,
        var_hi=var_hi,
        standardize=standardize,
        report_rule=rule,
        seeds=tuple(seeds),
        master_seed=master_seed,
        output_dir=out,
    )


def validate_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file, reporting every problem."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"{path}: cannot read ({e.strerror})"]) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: line {e.lineno}: invalid JSON ({e.msg})"]) from None

    lines = text.splitlines()

    def line_of(key: str):
        pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i, line in enumerate(lines, 1):
            if pat.search(line):
                return i
        return None

    try:
        return config_from_dict(raw, line_of)
    except ConfigError as e:
        raise ConfigError([f"{path}: {m}" for m in e.errors]) from None
