"""Run configured experiments across seeds and persist plot-ready outputs.

Layout of a run directory::

    trace_seed<S>.csv   one row per round
    aggregate.csv       per-round mean, standard error and +-2 SE bands
    reports.csv         reported point and simple regret per seed and rule
    metadata.json       normalised config, hash, version, timings, diagnostics

Reals are written with 17 significant digits, so a CSV round-trips doubles
exactly. Seeds may run in worker processes; files are written afterwards in
seed order, so outputs do not depend on the degree of parallelism.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from rahbo import __version__
from rahbo.algorithms import RunResult, run
from rahbo.benchmarks import get_benchmark
from rahbo.config import REPORT_RULES, ExperimentConfig
from rahbo.errors import InputError, NumericalError
from rahbo.metrics import Band, aggregate, mean_se

log = logging.getLogger(__name__)

METRICS = ("cum_regret", "cum_regret_per_sample") + tuple(f"simple_{r}" for r in REPORT_RULES)


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def trace_columns(d: int) -> list[str]:
    return (
        ["round"]
        + [f"x_{i}" for i in range(d)]
        + [
            "sample_mean", "sample_var", "mv_true", "r_inst", "r_cum", "r_cum_per_sample",
            "info_gain_f", "info_gain_var", "beta_used", "beta_var_used",
        ]
    )


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    path.write_bytes(buf.getvalue().encode())


def write_trace_csv(result: RunResult, path) -> None:
    d = result.trace[0].x.size
    rows = [
        [row.round, *row.x, row.sample_mean, row.sample_var, row.mv_true, row.r_inst, row.r_cum,
         row.r_cum_per_sample, row.info_gain_f, row.info_gain_var, row.beta_used, row.beta_var_used]
        for row in result.trace
    ]
    _write_csv(Path(path), trace_columns(d), rows)


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


def write_aggregate_csv(results: list[RunResult], path) -> None:
    if len(results) >= 2:
        bands = aggregate(results)
    else:
        r = results[0]
        zero = np.zeros(len(r.trace))
        bands = {
            "r_cum": Band(np.array([row.r_cum for row in r.trace]), zero),
            "r_cum_per_sample": Band(np.array([row.r_cum_per_sample for row in r.trace]), zero),
        }
        bands.update({f"simple_{k}": Band(np.asarray(v), zero) for k, v in sorted(r.simple_regret_trace.items())})
    header = ["round"]
    cols = []
    for name, band in bands.items():
        header += [f"{name}_mean", f"{name}_se", f"{name}_lo", f"{name}_hi"]
        cols += [band.mean, band.se, band.lo, band.hi]
    T = len(results[0].trace)
    rows = [[t + 1] + [c[t] for c in cols] for t in range(T)]
    _write_csv(Path(path), header, rows)


def write_reports_csv(results: list[RunResult], path) -> None:
    d = results[0].reported_point.size
    header = ["seed", "rule"] + [f"x_{i}" for i in range(d)] + ["simple_regret"]
    rows = []
    for r in results:
        for rule in REPORT_RULES:
            rows.append([r.seed, rule, *r.reports[rule], r.simple_regret_trace[rule][-1]])
    _write_csv(Path(path), header, rows)


def _run_seed(args):
    cfg, seed = args
    try:
        return run(cfg, seed)
    except NumericalError as e:
        return ("numerical", seed, str(e))


class RunFailure(NumericalError):
    def __init__(self, seed: int, message: str):
        self.seed = seed
        super().__init__(f"seed {seed}: {message}")


def run_seeds(cfg: ExperimentConfig, threads: int = 1) -> list[RunResult]:
    jobs = [(cfg, s) for s in cfg.seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_run_seed, jobs))
    else:
        out = [_run_seed(j) for j in jobs]
    for item in out:
        if isinstance(item, tuple):
            raise RunFailure(item[1], item[2])
    return out


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> list[RunResult]:
    """Run every seed of ``cfg`` and write the run directory."""
    out = Path(out_dir or cfg.output_dir or f"runs/{cfg.benchmark}_{cfg.algorithm}_{cfg.config_hash()}")
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        results = run_seeds(cfg, threads)
    except RunFailure as e:
        meta = {"config": cfg.to_dict(), "config_hash": cfg.config_hash(), "version": __version__,
                "failed_seed": e.seed, "error": str(e)}
        (out / "failure.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
        raise
    wall = time.time() - started

    for r in results:
        write_trace_csv(r, out / f"trace_seed{r.seed}.csv")
    write_aggregate_csv(results, out / "aggregate.csv")
    write_reports_csv(results, out / "reports.csv")
    meta = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "version": __version__,
        "wall_time_s": wall,
        "threads": threads,
        "runs": [
            {
                "seed": r.seed,
                "final_r_cum": r.trace[-1].r_cum,
                "reported_point": r.reported_point,
                "reported_rule": r.reported_rule,
                "sampler_calls": r.sampler_calls,
                "diagnostics": r.diagnostics,
            }
            for r in results
        ],
    }
    (out / "metadata.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    log.info("wrote %d seeds to %s in %.1fs", len(results), out, wall)
    return results


# -- comparison --------------------------------------------------------

def load_run(run_dir) -> dict:
    run_dir = Path(run_dir)
    meta_path = run_dir / "metadata.json"
    if not meta_path.exists():
        raise InputError(f"{run_dir}: no metadata.json (not a run directory?)")
    meta = json.loads(meta_path.read_text())
    traces = {}
    for entry in meta["runs"]:
        traces[entry["seed"]] = read_trace_csv(run_dir / f"trace_seed{entry['seed']}.csv")
    reports = {}
    rp = run_dir / "reports.csv"
    if rp.exists():
        with open(rp, newline="") as fh:
            for row in csv.DictReader(fh):
                reports.setdefault(row["rule"], {})[int(row["seed"])] = float(row["simple_regret"])
    return {"dir": run_dir, "meta": meta, "traces": traces, "reports": reports}


def _metric_matrix(run: dict, metric: str) -> np.ndarray:
    seeds = sorted(run["traces"])
    if metric == "cum_regret":
        return np.array([run["traces"][s]["r_cum"] for s in seeds])
    if metric == "cum_regret_per_sample":
        return np.array([run["traces"][s]["r_cum_per_sample"] for s in seeds])
    raise InputError(f"unknown metric {metric!r}")


def _band(values: np.ndarray):
    if values.shape[0] >= 2:
        b = mean_se(values)
        return b.mean, b.se
    return values[0], np.zeros_like(values[0])


def compare(run_dirs, metric: str = "cum_regret", out_dir=None, n_bins: int = 10) -> str:
    """Side-by-side mean +- 2 SE per run, plus acquired-variance histograms.

    Writes ``comparison.csv`` and ``rho_histogram.csv`` to ``out_dir`` and
    returns a printable summary table.
    """
    if metric not in METRICS:
        raise InputError(f"metric must be one of {list(METRICS)}")
    runs = [load_run(d) for d in run_dirs]
    if not runs:
        raise InputError("no run directories given")
    ref = runs[0]["meta"]["config"]
    mismatches = []
    for r in runs[1:]:
        c = r["meta"]["config"]
        for key in ("benchmark", "alpha", "T"):
            if c[key] != ref[key]:
                mismatches.append(f"{r['dir']}: {key}={c[key]!r} vs {ref[key]!r}")
    if mismatches:
        raise InputError("incompatible runs:\n" + "\n".join(mismatches))

    labels, seen = [], {}
    for r in runs:
        base = r["meta"]["config"]["algorithm"]
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")

    T = int(ref["T"])
    bench = get_benchmark(ref["benchmark"])
    out = Path(out_dir) if out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    lines = []
    if metric.startswith("simple_"):
        rule = metric[len("simple_"):]
        header = ["label", "mean", "se", "lo", "hi", "diff_vs_first"]
        rows, first = [], None
        for label, r in zip(labels, runs):
            vals = np.array([v for _, v in sorted(r["reports"].get(rule, {}).items())])
            if vals.size == 0:
                raise InputError(f"{r['dir']}: no reports for rule {rule!r}")
            m, se = _band(vals[:, None])
            m, se = float(m[0]), float(se[0])
            first = m if first is None else first
            rows.append([label, m, se, m - 2 * se, m + 2 * se, m - first])
        if out:
            _write_csv(out / "comparison.csv", header, rows)
        for row in rows:
            lines.append(f"{row[0]:<16} {metric}: {row[1]:.4g} +- {2 * row[2]:.3g}")
    else:
        header = ["round"]
        cols, first_mean = [], None
        finals = []
        for label, r in zip(labels, runs):
            mat = _metric_matrix(r, metric)
            m, se = _band(mat)
            first_mean = m if first_mean is None else first_mean
            header += [f"{label}_mean", f"{label}_se", f"{label}_lo", f"{label}_hi", f"{label}_diff"]
            cols += [m, se, m - 2 * se, m + 2 * se, m - first_mean]
            finals.append((label, m[-1], se[-1]))
        if out:
            _write_csv(out / "comparison.csv", header, [[t + 1] + [c[t] for c in cols] for t in range(T)])
        for label, m, se in finals:
            lines.append(f"{label:<16} {metric} at T={T}: {m:.4g} +- {2 * se:.3g}")

    # histogram of the true noise variance at every acquired point
    lo = float(ref.get("var_lo", bench.var_lo))
    hi = float(ref.get("var_hi", bench.var_hi))
    edges = np.linspace(lo, hi, n_bins + 1)
    hist_rows = []
    counts_all = []
    for label, r in zip(labels, runs):
        d = bench.dim
        X = np.vstack([np.column_stack([tr[f"x_{i}"] for i in range(d)]) for tr in r["traces"].values()])
        rho = bench.rho_sq(X)
        counts, _ = np.histogram(np.clip(rho, lo, hi), bins=edges)
        counts_all.append(counts)
        lines.append(f"{label:<16} mean true noise variance at acquired points: {rho.mean():.4g} (n={rho.size})")
    for b in range(n_bins):
        hist_rows.append([edges[b], edges[b + 1]] + [int(c[b]) for c in counts_all])
    if out:
        _write_csv(out / "rho_histogram.csv", ["bin_lo", "bin_hi"] + labels, hist_rows)
    return "\n".join(lines)
