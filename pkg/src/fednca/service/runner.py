"""Run experiments and summarize their CSV artifacts."""

import csv
import io
import json
from pathlib import Path
from typing import List

import numpy as np

from ..config import ExperimentConfig
from ..errors import ConfigError, FormatError
from ..fl import DensePayload
from ..fl.experiment import ROUNDS_SCHEMA, reports_to_csv, run_experiment
from ..fl.payloads import encode_payload
from ..nca import flatten_model, init_model, param_count, save_checkpoint
from ..netsim import LEDGER_SCHEMA
from .schemas import ReportSummary, TrainSummary


def train_run(cfg: ExperimentConfig, out_dir) -> TrainSummary:
    """Execute a full federated run and write its artifacts.

    Writes rounds.csv, ledger.csv, model.fnca, and summary.json into
    out_dir; reruns with one config produce byte-identical CSVs.
    """
    settings = cfg.to_settings()
    result = run_experiment(settings)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rounds_path = out / "rounds.csv"
    ledger_path = out / "ledger.csv"
    checkpoint_path = out / "model.fnca"
    summary_path = out / "summary.json"

    with open(rounds_path, "w", newline="") as f:
        reports_to_csv(result.reports, settings.n_clients, f)
    with open(ledger_path, "w", newline="") as f:
        result.ledger.to_csv(f)
    save_checkpoint(result.final_model, checkpoint_path)

    dense_bytes = len(
        encode_payload(DensePayload(flatten_model(init_model(settings.model, 0))))
    )
    up_mib = result.ledger.total_bytes("up") / 2**20
    down_mib = result.ledger.total_bytes("down") / 2**20
    n_rounds = len(result.reports)
    summary = TrainSummary(
        mode=settings.mode.value,
        rounds=n_rounds,
        clients=settings.n_clients,
        final_dice=result.test_dice,
        final_loss_mean=result.reports[-1].loss_mean if result.reports else float("nan"),
        param_count=param_count(settings.model),
        dense_payload_bytes=dense_bytes,
        total_up_mib=up_mib,
        total_down_mib=down_mib,
        mib_per_round=(up_mib + down_mib) / n_rounds if n_rounds else 0.0,
        total_wall_seconds=float(sum(r.wall_seconds for r in result.reports)),
        rounds_csv=str(rounds_path),
        ledger_csv=str(ledger_path),
        checkpoint=str(checkpoint_path),
        summary_json=str(summary_path),
    )
    summary_path.write_text(json.dumps(summary.model_dump(), indent=2, sort_keys=True) + "\n")
    return summary


def _read_schema_csv(path: Path):
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise FormatError(f"{path}: missing schema line")
    schema = lines[0].split("=", 1)[1].strip()
    if schema not in (ROUNDS_SCHEMA, LEDGER_SCHEMA):
        raise FormatError(f"{path}: unknown schema {schema!r}")
    reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
    return schema, list(reader)


def report_run(csv_paths: List[str]) -> ReportSummary:
    """Summarize rounds/ledger CSVs: final Dice, totals, per-round cost."""
    if not csv_paths:
        raise ConfigError("report needs at least one CSV path")
    rounds_rows, ledger_rows = [], []
    sources = {}
    for raw in csv_paths:
        path = Path(raw)
        if not path.exists():
            raise ConfigError(f"CSV not found: {path}")
        schema, rows = _read_schema_csv(path)
        sources[str(path)] = schema
        if schema == ROUNDS_SCHEMA:
            rounds_rows.extend(rows)
        else:
            ledger_rows.extend(rows)
    if not rounds_rows and not ledger_rows:
        raise ConfigError("no usable rows in the given CSVs")

    summary = ReportSummary(rounds=len(rounds_rows), sources=sources)
    if rounds_rows:
        last = rounds_rows[-1]
        summary.final_dice = float(last["dice"])
        summary.final_loss_mean = float(last["loss_mean"])
    if ledger_rows:
        up = sum(int(r["bytes"]) for r in ledger_rows if r["direction"] == "up")
        down = sum(int(r["bytes"]) for r in ledger_rows if r["direction"] == "down")
        summary.total_up_mib = up / 2**20
        summary.total_down_mib = down / 2**20
        summary.down_up_ratio = down / up if up else float("inf")
        n_rounds = len({r["round"] for r in ledger_rows})
        if n_rounds:
            summary.mib_per_round = (up + down) / 2**20 / n_rounds
    if summary.mib_per_round is None and rounds_rows:
        byte_cols = [
            k for k in rounds_rows[0]
            if k.startswith("up_bytes_c") or k.startswith("down_bytes_c")
        ]
        total = sum(int(r[c]) for r in rounds_rows for c in byte_cols)
        summary.mib_per_round = total / 2**20 / len(rounds_rows)
    return summary


def format_report_text(summary: ReportSummary) -> str:
    lines = [f"rounds: {summary.rounds}"]
    if summary.final_dice is not None:
        lines.append(f"final dice: {summary.final_dice:.4f}")
        lines.append(f"final loss: {summary.final_loss_mean:.6f}")
    if summary.total_up_mib is not None:
        lines.append(f"total upstream: {summary.total_up_mib:.4f} MiB")
        lines.append(f"total downstream: {summary.total_down_mib:.4f} MiB")
        lines.append(f"down/up ratio: {summary.down_up_ratio:.3f}")
    if summary.mib_per_round is not None:
        lines.append(f"MiB per round: {summary.mib_per_round:.4f}")
    return "\n".join(lines)
