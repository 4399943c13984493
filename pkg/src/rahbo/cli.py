"""Command-line entry point.

    rahbo run --config cfg.json [--seeds 0-24] [--out DIR] [--threads N]
    rahbo compare RUN_DIR [RUN_DIR ...] [--metric cum_regret] [--out DIR]
    rahbo validate --config cfg.json
    rahbo list-benchmarks

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from rahbo.benchmarks import BENCHMARKS, get_benchmark
from rahbo.config import ConfigError, validate_config
from rahbo.errors import InputError, NumericalError
from rahbo.harness import METRICS, RunFailure, compare, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0,3,5-7"`` -> ``(0, 3, 5, 6, 7)``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        else:
            seeds.append(int(part))
    if not seeds or len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise ValueError(f"invalid seed list {text!r}")
    return tuple(seeds)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rahbo", description="Risk-averse heteroscedastic Bayesian optimization")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config over its seeds")
    r.add_argument("--config", required=True)
    r.add_argument("--seeds", help="override seeds, e.g. 0-24 or 0,2,4")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--threads", type=int, default=1, help="worker processes for independent seeds")

    c = sub.add_parser("compare", help="compare run directories")
    c.add_argument("run_dirs", nargs="+")
    c.add_argument("--metric", choices=METRICS, default="cum_regret")
    c.add_argument("--out", help="directory for comparison.csv and rho_histogram.csv")
    c.add_argument("--bins", type=int, default=10)

    v = sub.add_parser("validate", help="validate a config file and echo it normalised")
    v.add_argument("--config", required=True)

    sub.add_parser("list-benchmarks", help="list available benchmarks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-benchmarks":
        for name in sorted(BENCHMARKS):
            b = get_benchmark(name)
            print(f"{name}\tdim={b.dim}\tbounds={b.bounds.tolist()}\tvariance in [{b.var_lo}, {b.var_hi}]")
        return EXIT_OK

    if args.command == "compare":
        try:
            print(compare(args.run_dirs, args.metric, args.out, args.bins))
        except InputError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    try:
        cfg = validate_config(args.config)
        if args.command == "run" and args.seeds:
            try:
                cfg = cfg.with_(seeds=parse_seeds(args.seeds))
            except ValueError as e:
                raise ConfigError([f"--seeds: {e}"]) from None
    except ConfigError as e:
        for msg in e.errors:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK

    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        cfg = cfg.with_(output_dir=args.out)
    try:
        results = run_experiment(cfg, cfg.output_dir, args.threads)
    except RunFailure as e:
        print(f"error: numerical failure in seed {e.seed}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    for r in results:
        print(f"seed {r.seed}: cumulative regret {r.trace[-1].r_cum:.6g}, reported {r.reported_point.tolist()}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
