"""
Tests for the command-line interface.
"""

import os
import sys

import yaml
from click.testing import CliRunner

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from main import EXIT_CONFIG_INVALID, EXIT_OK, EXIT_RUNTIME_FAILURE, cli

SWEEP = {
    "kind": "sweep",
    "seed": 2,
    "sim": {
        "ues": [{"lam": 0.5, "eps": 0.2, "cost": {"kind": "linear"}}] * 2,
        "horizon": 400,
        "warmup": 20,
        "replications": 2,
    },
    "sweep": {"lambdas": [0.3, 0.7], "epsilons": [0.2], "policies": ["whittle", "age_greedy"]},
}


def _config(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def test_run_writes_results(tmp_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", "--config", _config(tmp_path, SWEEP), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert (out / "sweep.csv").exists()
    assert (out / "metadata.json").exists()


def test_run_json_format_and_seed(tmp_path):
    out = tmp_path / "out"
    args = ["run", "--config", _config(tmp_path, SWEEP), "--out", str(out), "--format", "json", "--seed", "11"]
    result = CliRunner().invoke(cli, args)
    assert result.exit_code == EXIT_OK, result.output
    assert (out / "sweep.json").exists()


def test_run_invalid_config_exits_two(tmp_path):
    bad = {"kind": "index_table", "index_table": {"lam": 1.5, "eps": 0.2, "cost": {"kind": "linear"}}}
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", "--config", _config(tmp_path, bad), "--out", str(out)])
    assert result.exit_code == EXIT_CONFIG_INVALID
    assert "index_table.lam" in result.output
    assert not out.exists()


def test_run_runtime_failure_exits_three(tmp_path):
    failing = dict(SWEEP, sweep={"lambdas": [0.3], "epsilons": [0.2], "policies": ["optimal"]})
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", "--config", _config(tmp_path, failing), "--out", str(out)])
    assert result.exit_code == EXIT_RUNTIME_FAILURE
    assert not out.exists()


def test_compare_and_plot(tmp_path):
    out = tmp_path / "out"
    runner = CliRunner()
    assert runner.invoke(cli, ["run", "--config", _config(tmp_path, SWEEP), "--out", str(out)]).exit_code == 0
    results = str(out / "sweep.csv")

    result = runner.invoke(cli, ["compare", results, results])
    assert result.exit_code == 0, result.output
    assert (out / "sweep.ordering.txt").exists()

    result = runner.invoke(cli, ["plot", results, "--title", "two UEs"])
    assert result.exit_code == 0, result.output
    assert (out / "sweep.png").exists()


def test_compare_grid_mismatch_exits_two(tmp_path):
    runner = CliRunner()
    narrow = dict(SWEEP, sweep=dict(SWEEP["sweep"], lambdas=[0.3]))
    runner.invoke(cli, ["run", "--config", _config(tmp_path, SWEEP, "a.yaml"), "--out", str(tmp_path / "a")])
    runner.invoke(cli, ["run", "--config", _config(tmp_path, narrow, "b.yaml"), "--out", str(tmp_path / "b")])
    result = runner.invoke(cli, ["compare", str(tmp_path / "a" / "sweep.csv"), str(tmp_path / "b" / "sweep.csv")])
    assert result.exit_code == EXIT_CONFIG_INVALID


def test_presets_lists_every_preset():
    result = CliRunner().invoke(cli, ["presets"])
    assert result.exit_code == 0
    for name in ("preset_fig2", "preset_fig3", "preset_fig4"):
        assert name in result.output


def test_compare_non_numeric_cell_exits_two(tmp_path):
    path = tmp_path / "sweep.csv"
    path.write_text(
        "lambda,epsilon,policy,mean_cost,ci_low,ci_high,replications\n"
        "low,0.2,whittle,0.3,0.29,0.31,20\n",
        encoding="utf-8",
    )
    result = CliRunner().invoke(cli, ["compare", str(path)])
    assert result.exit_code == EXIT_CONFIG_INVALID
    assert "lambda" in result.output
