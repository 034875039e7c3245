"""Command-line client.

Thin wrapper over the service layer, run in-process so results depend only
on the config file and its seed. Exit codes: 0 success, 1 configuration
error, 2 runtime error. FEDNCA_THREADS caps per-round client parallelism.
"""

import json
import sys

import click

from .config import load_config
from .errors import ConfigError
from .service.bench import bench_compression_run, bench_he_run
from .service.runner import format_report_text, report_run, train_run


def _run(action):
    try:
        return action()
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(1)
    except Exception as err:  # noqa: BLE001 - boundary of the process
        click.echo(f"runtime error: {type(err).__name__}: {err}", err=True)
        sys.exit(2)


@click.group()
def main():
    """Federated NCA training simulator."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="print the summary as JSON")
def train(config_path, out_dir, as_json):
    """Run a federated experiment; writes rounds.csv, ledger.csv, model.fnca."""

    def action():
        cfg = load_config(config_path)
        return train_run(cfg, out_dir)

    summary = _run(action)
    if as_json:
        click.echo(json.dumps(summary.model_dump(), indent=2, sort_keys=True))
    else:
        click.echo(
            f"mode={summary.mode} rounds={summary.rounds} "
            f"final_dice={summary.final_dice:.4f} "
            f"up={summary.total_up_mib:.4f}MiB down={summary.total_down_mib:.4f}MiB"
        )
        click.echo(f"artifacts in {out_dir}")


@main.command("bench-he")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def bench_he(config_path, as_json):
    """Benchmark encrypt/decrypt at the model size and each baseline size."""

    def action():
        return bench_he_run(load_config(config_path))

    result = _run(action)
    if as_json:
        click.echo(json.dumps(result.model_dump(), indent=2, sort_keys=True))
        return
    click.echo(f"repeats={result.repeats} slot_count={result.slot_count}")
    header = f"{'name':<12}{'length':>12}{'chunks':>9}{'enc ms':>12}{'dec ms':>12}{'bytes':>14}{'xtime':>9}"
    click.echo(header)
    for row in result.rows:
        click.echo(
            f"{row.name:<12}{row.vector_length:>12}{row.ciphertext_count:>9}"
            f"{row.encrypt_ms:>12.2f}{row.decrypt_ms:>12.2f}{row.bytes:>14}"
            f"{row.time_ratio_vs_model:>9.1f}"
        )


@main.command("bench-compression")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def bench_compression(config_path, as_json):
    """Payload sizes and round-trip errors for each codec and size."""

    def action():
        return bench_compression_run(load_config(config_path))

    result = _run(action)
    if as_json:
        click.echo(json.dumps(result.model_dump(), indent=2, sort_keys=True))
        return
    click.echo(f"k_percent={result.k_percent}")
    click.echo(f"{'name':<12}{'codec':<8}{'bytes':>14}{'MiB':>12}{'max err':>12}{'xdense':>10}")
    for row in result.rows:
        click.echo(
            f"{row.name:<12}{row.codec:<8}{row.bytes:>14}{row.mib:>12.4f}"
            f"{row.max_roundtrip_error:>12.3e}{row.ratio_vs_model_dense:>10.1f}"
        )


@main.command()
@click.argument("csv_paths", nargs=-1, required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def report(csv_paths, as_json):
    """Summarize rounds/ledger CSVs from a training run."""

    def action():
        return report_run(list(csv_paths))

    summary = _run(action)
    if as_json:
        click.echo(json.dumps(summary.model_dump(), indent=2, sort_keys=True))
    else:
        click.echo(format_report_text(summary))


if __name__ == "__main__":
    main()
