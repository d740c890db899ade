"""Command-line interface: run experiments, re-summarize results, benchmark
the kernel backends, and inspect the dataset registry."""

from __future__ import annotations

import json
import logging

import click

from . import __version__, backend
from .dataset import load_registry
from .harness import ExperimentConfig, emit, read_results_csv, run_and_emit, summarize


@click.group()
@click.version_option(version=__version__, prog_name="alrbench")
def main():
    """Benchmark harness for unsupervised pool-based active learning."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


def _csv_list(_ctx, _param, value):
    if value is None:
        return None
    return tuple(v.strip() for v in value.split(",") if v.strip())


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON config file; flags override its values.")
@click.option("--datasets", callback=_csv_list,
              help="Comma-separated dataset names from the registry.")
@click.option("--methods", callback=_csv_list,
              help="Subset of RS,P-ALICE,GSx,RD,IRD,ID.")
@click.option("--models", callback=_csv_list,
              help="Subset of Ridge,LASSO,LinearSVR,OLS.")
@click.option("--m-min", type=int, help="Smallest sample budget M.")
@click.option("--m-max", type=int, help="Largest sample budget M.")
@click.option("--runs", type=int, help="Repetitions per dataset.")
@click.option("--seed", type=int, help="Master seed.")
@click.option("--cmax", type=int, help="Maximum IRD sweeps.")
@click.option("--lambda", "lambda_grid", multiple=True, type=float,
              help="Ridge/LASSO regularization value (repeatable).")
@click.option("--svr-c", "svr_c_grid", multiple=True, type=float,
              help="SVR box constraint value (repeatable).")
@click.option("--normalize-on", type=click.Choice(["full", "pool"]),
              help="Where normalization statistics come from.")
@click.option("--palice-weighted/--no-palice-weighted", default=None,
              help="Pass P-ALICE importance weights into ridge fits.")
@click.option("--registry", type=click.Path(exists=True),
              help="Dataset registry manifest (default: packaged).")
@click.option("--jobs", type=int, help="Parallel (dataset, run) workers.")
@click.option("--out", "output_dir", type=click.Path(),
              help="Output directory for the result CSVs.")
def run(config_path, **flags):
    """Run the full experiment protocol and write result CSVs."""
    base: dict = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            base = json.load(fh)
    overrides = {
        "datasets": flags["datasets"],
        "methods": flags["methods"],
        "models": flags["models"],
        "runs": flags["runs"],
        "master_seed": flags["seed"],
        "c_max": flags["cmax"],
        "lambda_grid": flags["lambda_grid"] or None,
        "svr_c_grid": flags["svr_c_grid"] or None,
        "normalize_on": flags["normalize_on"],
        "palice_weighted_ridge": flags["palice_weighted"],
        "registry": flags["registry"],
        "jobs": flags["jobs"],
        "output_dir": flags["output_dir"],
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    m_min = flags["m_min"] if flags["m_min"] is not None else None
    m_max = flags["m_max"] if flags["m_max"] is not None else None
    if m_min is not None or m_max is not None:
        grid = base.get("m_grid", list(range(5, 16)))
        lo = m_min if m_min is not None else min(grid)
        hi = m_max if m_max is not None else max(grid)
        base["m_grid"] = list(range(lo, hi + 1))
    if "datasets" not in base:
        raise click.UsageError("no datasets given (use --datasets or a config file)")
    config = ExperimentConfig(**base)
    paths = run_and_emit(config)
    click.echo(f"backend: {backend.BACKEND}")
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")


@main.command("summarize")
@click.option("--results", "results_path", type=click.Path(exists=True),
              required=True, help="results.csv from a previous run.")
@click.option("--out", "output_dir", type=click.Path(), required=True)
def summarize_cmd(results_path, output_dir):
    """Recompute summary tables from an existing results.csv."""
    records = read_results_csv(results_path)
    summary = summarize(records)
    paths = emit(records, summary, output_dir)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")
    for warning in summary.warnings:
        click.echo(f"warning: {warning}", err=True)


@main.command("list-datasets")
@click.option("--registry", type=click.Path(exists=True),
              help="Registry manifest (default: packaged).")
def list_datasets(registry):
    """Show registry entries and whether their files are present."""
    entries = load_registry(registry)
    for name in sorted(entries):
        entry = entries[name]
        status = "present" if entry.path.is_file() else "MISSING"
        click.echo(f"{name:24s} {status:8s} target={entry.target} "
                   f"categorical={entry.categorical or '[]'}")


@main.command()
@click.option("--repeats", type=int, default=5, show_default=True)
def bench(repeats):
    """Time the compiled kernels against the pure-Python fallback."""
    from .benchmark import run_benchmark

    run_benchmark(repeats=repeats, echo=click.echo)
