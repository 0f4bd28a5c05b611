"""
Config-driven experiments: index tables, oracle cross-checks, simulation
runs and sweeps, and the built-in presets.
"""

from .compare import OrderingReport, OrderingVerdict, compare_policies, load_results, write_report
from .config import ConfigInvalid, ExperimentConfig, GridMismatch, load_config, load_config_dict
from .plotting import plot_results
from .presets import PRESETS
from .runner import COLUMNS, ExperimentFailed, ExperimentResult, execute, render_rows, run_experiment, solve_optimum
from .version import __version__

__all__ = [
    "COLUMNS",
    "ConfigInvalid",
    "ExperimentConfig",
    "ExperimentFailed",
    "ExperimentResult",
    "GridMismatch",
    "OrderingReport",
    "OrderingVerdict",
    "PRESETS",
    "__version__",
    "compare_policies",
    "execute",
    "load_config",
    "load_config_dict",
    "load_results",
    "plot_results",
    "render_rows",
    "run_experiment",
    "solve_optimum",
    "write_report",
]
