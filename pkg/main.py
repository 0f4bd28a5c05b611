"""
Main application entry point.
Command-line interface for the cost-of-AoI scheduling experiments.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

# Add project root to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from experiments import (  # noqa: E402
    PRESETS,
    ConfigInvalid,
    GridMismatch,
    compare_policies,
    plot_results,
    run_experiment,
    write_report,
)
from settings import load_settings  # noqa: E402

EXIT_OK = 0
EXIT_CONFIG_INVALID = 2
EXIT_RUNTIME_FAILURE = 3

console = Console()
settings = load_settings()


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=False)],
        force=True,
    )


def print_rows(result, limit: int = 20) -> None:
    """Show the first rows of a result table."""
    table = Table(title=f"{result.kind} ({len(result.rows)} rows)", style="cyan")
    for column in result.columns:
        table.add_column(column, style="white")
    for row in result.rows[:limit]:
        table.add_row(*[_format(row.get(c)) for c in result.columns])
    console.print(table)
    if len(result.rows) > limit:
        console.print(f"... {len(result.rows) - limit} more rows in {result.results_path}", style="dim")


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


@click.group()
@click.option("--log-level", default=settings.log_level, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Logging level (env AOI_LOG_LEVEL)")
def cli(log_level: str):
    """Whittle-index scheduling for the cost of AoI: index tables, oracle checks and simulations."""
    setup_logging(log_level)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="Experiment config (YAML) or metadata.json of an earlier run")
@click.option("--out", default=None, help="Output directory (env AOI_OUT_DIR)")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Overrides the configured seed")
@click.option("--threads", type=click.IntRange(1), default=None, help="Worker processes (env AOI_THREADS)")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Result file format")
def run(config_path: str, out: Optional[str], seed: Optional[int], threads: Optional[int], fmt: Optional[str]):
    """Run an experiment and write its results and metadata."""
    threads = threads or (settings.threads if settings.threads > 1 else None)
    try:
        result = run_experiment(
            config_path, out=out, seed=seed, threads=threads, fmt=fmt, default_out=settings.out_dir
        )
    except ConfigInvalid as e:
        console.print(f"❌ Invalid config: {e}", style="red")
        sys.exit(EXIT_CONFIG_INVALID)
    except Exception as e:
        console.print(f"❌ Experiment failed: {e}", style="red")
        sys.exit(EXIT_RUNTIME_FAILURE)

    print_rows(result)
    console.print(
        Panel(
            f"results: {result.results_path}\nmetadata: {result.metadata_path}\nwall time: {result.wall_time:.1f}s",
            title="✅ Done",
            style="green",
        )
    )
    sys.exit(EXIT_OK)


@cli.command()
@click.argument("results_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("results_b", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--proposed", default="whittle", show_default=True, help="Policy compared against the others")
@click.option("--report", "report_path", default=None, help="Where to write the text report")
def compare(results_a: str, results_b: Optional[str], proposed: str, report_path: Optional[str]):
    """Check the proposed policy against the benchmarks in one or two results files."""
    try:
        report = compare_policies(results_a, results_b, proposed=proposed)
    except GridMismatch as e:
        console.print(f"❌ Grid mismatch: {e}", style="red")
        sys.exit(EXIT_CONFIG_INVALID)

    table = Table(title=f"{proposed} against benchmarks", style="cyan")
    for column in ["λ", "ε", "benchmark", proposed, "benchmark cost", "gain", "not worse", "separated"]:
        table.add_column(column)
    for v in report.verdicts:
        table.add_row(
            _format(v.lam), _format(v.eps), v.benchmark, _format(v.proposed_cost), _format(v.benchmark_cost),
            f"{100 * v.relative_gain:.2f}%",
            "✅" if v.not_worse else "❌",
            "yes" if v.separated else "no",
        )
    console.print(table)
    console.print(
        f"separated at {100 * report.separated_fraction:.1f}% of comparisons, "
        f"mean gain {100 * report.mean_relative_gain:.2f}%"
        + ("" if report.reference_gain is None else f" (B: {100 * report.reference_gain:.2f}%)")
    )
    path = Path(report_path) if report_path else Path(results_a).with_suffix(".ordering.txt")
    write_report(report, path)
    console.print(f"report written to {path}", style="dim")


@cli.command()
@click.argument("results", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, help="Image path (defaults to RESULTS with .png)")
@click.option("--title", default=None, help="Figure title")
def plot(results: str, out: Optional[str], title: Optional[str]):
    """Render a sweep results file as a line chart."""
    try:
        path = plot_results(results, out=out, title=title)
    except (ValueError, KeyError) as e:
        console.print(f"❌ Cannot plot {results}: {e}", style="red")
        sys.exit(EXIT_CONFIG_INVALID)
    console.print(f"✅ {path}", style="green")


@cli.command()
def presets():
    """List the built-in experiment presets."""
    table = Table(title="Built-in presets")
    table.add_column("Kind", style="cyan", no_wrap=True)
    table.add_column("Description", style="white")
    table.add_column("UEs", style="yellow")
    table.add_column("λ grid", style="green")
    table.add_column("ε grid", style="blue")

    for name, preset in PRESETS.items():
        defaults = preset["defaults"]
        sweep = defaults.get("sweep", {})
        table.add_row(
            name,
            preset["description"],
            str(len(defaults["sim"]["ues"])),
            ", ".join(f"{x:g}" for x in sweep.get("lambdas", [])),
            ", ".join(f"{x:g}" for x in sweep.get("epsilons", [])),
        )
    console.print(table)
    console.print("(λ, ε) values are reconstructions; override them in a config file.", style="dim")


if __name__ == "__main__":
    cli()
