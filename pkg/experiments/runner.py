"""
Experiment runner: turns a validated ExperimentConfig into result rows and
writes them, with a metadata file, into an output directory.
"""

import csv
import io
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel

from oracle import JointMdp, JointPolicy, index_by_bisection, joint_rvi_solve
from sim import SimConfig, SimReport, grid_config, run, sweep
from whittle import UeState, whittle_index, whittle_index_value

from .config import ExperimentConfig, JointSection, load_config
from .version import __version__

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["lambda", "epsilon", "policy", "mean_cost", "ci_low", "ci_high", "replications"]

COLUMNS: Dict[str, List[str]] = {
    "index_table": ["a", "d", "index", "d1", "branch"],
    "oracle_check": [
        "lambda", "epsilon", "cost", "a", "d", "closed_form", "bisection", "rel_error", "within_tolerance",
    ],
    "sim_run": ["policy", "mean_cost", "ci_low", "ci_high", "replications", "throughput"],
    "sweep": SWEEP_COLUMNS,
    "preset_fig2": SWEEP_COLUMNS + ["optimal_cost"],
    "preset_fig3": SWEEP_COLUMNS,
    "preset_fig4": SWEEP_COLUMNS,
}

Row = Dict[str, Any]


class ExperimentFailed(RuntimeError):
    """Raised when an experiment cannot produce its full result table."""


class ExperimentResult(BaseModel):
    kind: str
    columns: List[str]
    rows: List[Row]
    results_path: Optional[Path] = None
    metadata_path: Optional[Path] = None
    wall_time: float = 0.0


# ------------------------
# Row producers, one per experiment kind
# ------------------------

def _index_table_rows(config: ExperimentConfig) -> List[Row]:
    section = config.index_table
    rows = []
    for a in range(1, section.a_max + 1):
        for d in range(section.d_max + 1):
            value = whittle_index(section.lam, section.eps, section.cost, UeState(a, d), section.d_cap)
            rows.append({"a": a, "d": d, "index": value.index, "d1": value.d1, "branch": value.branch})
    return rows


def _oracle_check_rows(config: ExperimentConfig) -> List[Row]:
    section = config.oracle_check
    rows = []
    for lam in section.lambdas:
        for eps in section.epsilons:
            for cost in section.costs:
                failures = 0
                for a in range(1, section.a_max + 1):
                    for d in range(1, section.d_max + 1):
                        closed = whittle_index_value(lam, eps, cost, a, d)
                        bisection = index_by_bisection(
                            lam, eps, cost, UeState(a, d),
                            a_max=section.rvi_cap, d_max=section.rvi_cap, tolerance=section.tolerance,
                        )
                        error = abs(closed - bisection)
                        within = error <= max(section.rel_tolerance * abs(bisection), section.abs_floor)
                        failures += not within
                        rows.append({
                            "lambda": lam,
                            "epsilon": eps,
                            "cost": cost.label,
                            "a": a,
                            "d": d,
                            "closed_form": closed,
                            "bisection": bisection,
                            "rel_error": error / abs(bisection) if bisection else error,
                            "within_tolerance": within,
                        })
                logger.info(f"oracle check λ={lam}, ε={eps}, {cost.label}: {failures} states out of tolerance")
    return rows


def solve_optimum(sim_config: SimConfig, joint: Optional[JointSection] = None) -> JointPolicy:
    """Joint value-iteration optimum for the fleet of ``sim_config``."""
    joint = joint or JointSection()
    mdp = JointMdp(ues=sim_config.ues, a_max=joint.a_max, d_max=joint.d_max, tolerance=joint.tolerance)
    return joint_rvi_solve(mdp)


def _sim_run_rows(config: ExperimentConfig) -> List[Row]:
    policies = config.policies or [config.sim.policy]
    table = solve_optimum(config.sim, config.joint) if "optimal" in policies else None
    rows = []
    for policy in policies:
        report = run(config.sim, policy, table=table)
        rows.append({
            "policy": policy,
            "mean_cost": report.mean_cost,
            "ci_low": report.ci_low,
            "ci_high": report.ci_high,
            "replications": report.replications,
            "throughput": report.throughput,
        })
    return rows


def _common(values: Sequence[float]) -> Optional[float]:
    return values[0] if len(set(values)) == 1 else None


def _sweep_row(sim_config: SimConfig, policy: str, report: SimReport) -> Row:
    return {
        "lambda": _common([ue.lam for ue in sim_config.ues]),
        "epsilon": _common([ue.eps for ue in sim_config.ues]),
        "policy": policy,
        "mean_cost": report.mean_cost,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "replications": report.replications,
    }


def _sweep_rows(config: ExperimentConfig) -> List[Row]:
    section = config.sweep
    cells = sweep(config.sim, section.lambdas, section.epsilons, section.policies)
    failed = [cell for cell in cells if not cell.ok]
    if failed:
        details = "; ".join(f"λ={c.lam}, ε={c.eps}, {c.policy}: {c.error}" for c in failed)
        raise ExperimentFailed(f"{len(failed)} of {len(cells)} sweep cells failed: {details}")
    rows = []
    for cell in cells:
        cell_config = grid_config(config.sim, cell.lam, cell.eps)
        rows.append(_sweep_row(cell_config, cell.policy, cell.report))
    return rows


def _optimum_rows(config: ExperimentConfig) -> List[Row]:
    section = config.sweep
    rows = []
    for lam in section.lambdas or [None]:
        for eps in section.epsilons or [None]:
            cell = grid_config(config.sim, lam, eps)
            table = solve_optimum(cell, config.joint)
            logger.info(f"joint optimum at λ={lam}, ε={eps}: {table.average_cost:.6g}")
            for policy in section.policies:
                report = run(cell, policy, table=table)
                row = _sweep_row(cell, policy, report)
                row["optimal_cost"] = table.average_cost
                rows.append(row)
    return rows


PRODUCERS = {
    "index_table": _index_table_rows,
    "oracle_check": _oracle_check_rows,
    "sim_run": _sim_run_rows,
    "sweep": _sweep_rows,
    "preset_fig2": _optimum_rows,
    "preset_fig3": _sweep_rows,
    "preset_fig4": _sweep_rows,
}


# ------------------------
# Output
# ------------------------

def _cell(value: Any) -> Any:
    return "" if value is None else value


def render_rows(columns: List[str], rows: List[Row], fmt: str, kind: str) -> str:
    """CSV with a header line, or JSON with the rows under "rows"."""
    if fmt == "json":
        payload = {"kind": kind, "columns": columns, "rows": [{c: row.get(c) for c in columns} for row in rows]}
        return json.dumps(payload, indent=2) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def _write_atomically(files: List[Tuple[Path, str]]) -> None:
    """Stage every file as a temporary sibling, then rename them all into place."""
    staged = []
    try:
        for path, text in files:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except Exception:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise


def execute(config: ExperimentConfig) -> ExperimentResult:
    """Compute the result rows of ``config`` without writing anything."""
    started = time.perf_counter()
    logger.info(f"running {config.kind} experiment")
    rows = PRODUCERS[config.kind](config)
    wall = time.perf_counter() - started
    logger.info(f"{config.kind} produced {len(rows)} rows in {wall:.1f}s")
    return ExperimentResult(kind=config.kind, columns=COLUMNS[config.kind], rows=rows, wall_time=wall)


def run_experiment(
    source: Union[str, Path, ExperimentConfig],
    out: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    fmt: Optional[str] = None,
    default_out: str = "results",
) -> ExperimentResult:
    """
    Run one experiment and write ``<kind>.<format>`` plus ``metadata.json``.

    Args:
        source: Config file, metadata file of an earlier run, or a loaded config
        out: Output directory; defaults to the config's ``output``, then ``default_out``
        seed: Overrides the configured seed
        threads: Worker processes for replications or sweep cells
        fmt: "csv" or "json", overriding the config
        default_out: Output directory when neither ``out`` nor the config names one

    Returns:
        ExperimentResult with the paths written

    Raises:
        ConfigInvalid: if the config does not validate; nothing is written
        ExperimentFailed: if any part of the experiment fails; nothing is written
    """
    config = source if isinstance(source, ExperimentConfig) else load_config(source)
    config = config.resolved(seed=seed, threads=threads, fmt=fmt)
    out_dir = Path(out or config.output or default_out)

    try:
        result = execute(config)
    except ExperimentFailed:
        raise
    except Exception as e:
        logger.error(f"{config.kind} experiment failed: {e}")
        raise ExperimentFailed(f"{type(e).__name__}: {e}") from e

    results_path = out_dir / f"{config.kind}.{config.format}"
    metadata_path = out_dir / "metadata.json"
    metadata = {
        "resolved_config": config.model_dump(mode="json"),
        "seed": config.seed,
        "version": __version__,
        "wall_time_seconds": result.wall_time,
        "results_file": results_path.name,
        "rows": len(result.rows),
    }
    _write_atomically([
        (results_path, render_rows(result.columns, result.rows, config.format, config.kind)),
        (metadata_path, json.dumps(metadata, indent=2) + "\n"),
    ])
    logger.info(f"wrote {results_path} and {metadata_path}")
    return result.model_copy(update={"results_path": results_path, "metadata_path": metadata_path})
