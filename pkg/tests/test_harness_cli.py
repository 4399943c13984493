import csv
import json

import numpy as np
import pytest

from rahbo import harness
from rahbo.cli import main, parse_seeds
from rahbo.config import ConfigError, config_from_dict, validate_config
from rahbo.errors import InputError, NumericalError
from rahbo.harness import compare, read_trace_csv, run_experiment, trace_columns

TINY = {
    "benchmark": "sine",
    "algorithm": "rahbo",
    "T": 4,
    "k": 4,
    "n_init": 3,
    "candidate_grid": 32,
    "kernel_f": {"family": "matern52", "lengthscales": [0.2]},
    "kernel_var": {"family": "matern52", "lengthscales": [0.3]},
    "seeds": [0, 1],
}


def write_cfg(path, **changes):
    cfg = {**TINY, **changes}
    path.write_text(json.dumps(cfg, indent=2))
    return path


def test_trace_columns():
    assert trace_columns(2) == [
        "round", "x_0", "x_1", "sample_mean", "sample_var", "mv_true", "r_inst", "r_cum",
        "r_cum_per_sample", "info_gain_f", "info_gain_var", "beta_used", "beta_var_used",
    ]


def test_single_round_trace(tmp_path):
    cfg = config_from_dict({**TINY, "T": 1, "seeds": [0]})
    run_experiment(cfg, tmp_path)
    with open(tmp_path / "trace_seed0.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == trace_columns(1)
    assert len(rows) == 2 and rows[1][0] == "1"
    for name in ("aggregate.csv", "reports.csv", "metadata.json"):
        assert (tmp_path / name).exists()


def test_csv_round_trips_doubles(tmp_path):
    cfg = config_from_dict(TINY)
    results = run_experiment(cfg, tmp_path)
    tr = read_trace_csv(tmp_path / "trace_seed1.csv")
    np.testing.assert_array_equal(tr["r_cum"], [row.r_cum for row in results[1].trace])
    np.testing.assert_array_equal(tr["sample_var"], [row.sample_var for row in results[1].trace])


def test_cli_run_is_byte_identical(tmp_path):
    cfg_path = write_cfg(tmp_path / "cfg.json")
    outs = []
    for name, threads in (("a", 1), ("b", 1), ("c", 2)):
        assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / name), "--threads", str(threads)]) == 0
        outs.append(tmp_path / name)
    for seed in (0, 1):
        ref = (outs[0] / f"trace_seed{seed}.csv").read_bytes()
        for other in outs[1:]:
            assert (other / f"trace_seed{seed}.csv").read_bytes() == ref
    assert (outs[0] / "aggregate.csv").read_bytes() == (outs[2] / "aggregate.csv").read_bytes()


def test_seed_override(tmp_path):
    cfg_path = write_cfg(tmp_path / "cfg.json")
    assert main(["run", "--config", str(cfg_path), "--seeds", "3-4", "--out", str(tmp_path / "o")]) == 0
    assert sorted(p.name for p in (tmp_path / "o").glob("trace_*.csv")) == ["trace_seed3.csv", "trace_seed4.csv"]
    assert parse_seeds("0,3,5-7") == (0, 3, 5, 6, 7)
    with pytest.raises(ValueError):
        parse_seeds("1,1")


def test_config_hash():
    a = config_from_dict(TINY)
    assert a.config_hash() == config_from_dict(dict(TINY)).config_hash()
    assert a.config_hash() != config_from_dict({**TINY, "alpha": 0.5}).config_hash()
    assert a.config_hash() == a.with_(output_dir="elsewhere").config_hash()


def test_validate_reports_every_error_with_lines(tmp_path, capsys):
    path = write_cfg(tmp_path / "bad.json", k=1, alpha=-2, bogus=3)
    with pytest.raises(ConfigError) as info:
        validate_config(path)
    msgs = "\n".join(info.value.errors)
    assert "k: must be >= 2" in msgs and "sample variance" in msgs
    assert "alpha" in msgs and "bogus: unknown field" in msgs
    lines = path.read_text().splitlines()
    k_line = next(i for i, l in enumerate(lines, 1) if '"k"' in l)
    assert f"line {k_line}: k" in msgs
    assert main(["validate", "--config", str(path)]) == 2
    assert main(["run", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") >= 6


def test_validate_ok_and_malformed(tmp_path, capsys):
    good = write_cfg(tmp_path / "good.json")
    assert main(["validate", "--config", str(good)]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["candidate_grid"] == 32 and echoed["lambda"] == 1.0
    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "T": 3,\n}')
    assert main(["validate", "--config", str(broken)]) == 2
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_list_benchmarks(capsys):
    assert main(["list-benchmarks"]) == 0
    out = capsys.readouterr().out
    assert "sine" in out and "branin" in out


def test_compare(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_experiment(config_from_dict(TINY), a)
    run_experiment(config_from_dict({**TINY, "algorithm": "gp_ucb"}), b)
    text = compare([a, a], "cum_regret", tmp_path / "self")
    assert "rahbo" in text
    with open(tmp_path / "self" / "comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["rahbo#2_diff"]) == 0.0 for r in rows)

    compare([a, b], "cum_regret", tmp_path / "ab")
    with open(tmp_path / "ab" / "rho_histogram.csv") as fh:
        hist = list(csv.DictReader(fh))
    for label in ("rahbo", "gp_ucb"):
        assert sum(int(r[label]) for r in hist) == TINY["T"] * len(TINY["seeds"])
    assert "simple_lcb_mv" in compare([a, b], "simple_lcb_mv")
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "cli")]) == 0


def test_compare_rejects_incompatible_runs(tmp_path):
    run_experiment(config_from_dict(TINY), tmp_path / "a")
    run_experiment(config_from_dict({**TINY, "alpha": 0.5}), tmp_path / "b")
    with pytest.raises(InputError, match="alpha"):
        compare([tmp_path / "a", tmp_path / "b"])
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b")]) == 2
    with pytest.raises(InputError):
        compare([tmp_path / "nothing"])


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg, seed):
        raise NumericalError("factorization failed")

    monkeypatch.setattr(harness, "run", boom)
    cfg_path = write_cfg(tmp_path / "cfg.json")
    assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 3
    failure = json.loads((tmp_path / "o" / "failure.json").read_text())
    assert failure["failed_seed"] == 0
    assert "seed 0" in capsys.readouterr().err
