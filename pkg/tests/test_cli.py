"""CLI behavior: artifacts, exit codes, reproducibility, reporting."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from fednca.cli import main

QUICK_YAML = """\
mode: plain
seed: 7
rounds: 2
clients: 3
model:
  channels: 5
  hidden_units: 8
  t0: 2
  t1: 2
  downscale_factor: 2
  eta: 0.01
training:
  local_epochs: 1
  batch_size: 0
dataset:
  height: 16
  width: 16
  n_samples: 12
  noise_std: 0.02
"""

BENCH_YAML = QUICK_YAML + """\
baselines:
  - name: midsize
    param_count: 50000
bench:
  repeats: 2
"""


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def quick_config(tmp_path):
    path = tmp_path / "quick.yaml"
    path.write_text(QUICK_YAML)
    return path


def test_train_writes_artifacts(runner, quick_config, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(
        main, ["train", "--config", str(quick_config), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    for name in ("rounds.csv", "ledger.csv", "model.fnca", "summary.json"):
        assert (out / name).exists()
        assert (out / name).stat().st_size > 0


def test_train_invalid_config_exits_one_with_field_path(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(
        QUICK_YAML.replace("  local_epochs: 1", "  local_epochs: 1\n  k_percent: 0")
    )
    out = tmp_path / "run"
    result = runner.invoke(main, ["train", "--config", str(path), "--out", str(out)])
    assert result.exit_code == 1
    assert "training.k_percent" in result.output


def test_train_missing_config_exits_one(runner, tmp_path):
    result = runner.invoke(
        main, ["train", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]
    )
    assert result.exit_code == 1


def test_train_reruns_byte_identical(runner, quick_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        result = runner.invoke(
            main, ["train", "--config", str(quick_config), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
    assert (out1 / "rounds.csv").read_bytes() == (out2 / "rounds.csv").read_bytes()
    assert (out1 / "ledger.csv").read_bytes() == (out2 / "ledger.csv").read_bytes()
    assert (out1 / "model.fnca").read_bytes() == (out2 / "model.fnca").read_bytes()


def test_report_totals_match_column_sums(runner, quick_config, tmp_path):
    out = tmp_path / "run"
    assert (
        runner.invoke(
            main, ["train", "--config", str(quick_config), "--out", str(out)]
        ).exit_code
        == 0
    )
    result = runner.invoke(
        main,
        ["report", str(out / "rounds.csv"), str(out / "ledger.csv"), "--json"],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)

    ledger_lines = (out / "ledger.csv").read_text().strip().split("\n")[2:]
    up = sum(int(l.split(",")[4]) for l in ledger_lines if l.split(",")[1] == "up")
    assert summary["total_up_mib"] == pytest.approx(up / 2**20)
    assert summary["rounds"] == 2
    assert summary["mib_per_round"] == pytest.approx(
        (summary["total_up_mib"] + summary["total_down_mib"]) / 2
    )


def test_report_empty_args_fails(runner):
    result = runner.invoke(main, ["report"])
    assert result.exit_code != 0


def test_report_unknown_schema_rejected(runner, tmp_path):
    bad = tmp_path / "x.csv"
    bad.write_text("# schema=other.v9\na,b\n1,2\n")
    result = runner.invoke(main, ["report", str(bad)])
    assert result.exit_code == 2


def test_bench_he_cli(runner, tmp_path):
    path = tmp_path / "bench.yaml"
    path.write_text(BENCH_YAML)
    result = runner.invoke(main, ["bench-he", "--config", str(path), "--json"])
    assert result.exit_code == 0, result.output
    body = json.loads(result.output)
    names = [r["name"] for r in body["rows"]]
    assert names == ["model", "midsize"]


def test_bench_compression_cli(runner, tmp_path):
    path = tmp_path / "bench.yaml"
    path.write_text(BENCH_YAML)
    result = runner.invoke(main, ["bench-compression", "--config", str(path)])
    assert result.exit_code == 0, result.output
    assert "dense" in result.output and "topk" in result.output
