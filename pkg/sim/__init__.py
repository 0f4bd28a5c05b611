"""
Monte-Carlo simulation of the AoI scheduling system.
"""

from .engine import (
    FleetRandom,
    ReplicationResult,
    SimConfig,
    SimReport,
    SimulationError,
    SlotOutcome,
    SweepCell,
    aggregate,
    grid_config,
    run,
    step,
    sweep,
)

__all__ = [
    "FleetRandom",
    "ReplicationResult",
    "SimConfig",
    "SimReport",
    "SimulationError",
    "SlotOutcome",
    "SweepCell",
    "aggregate",
    "grid_config",
    "run",
    "step",
    "sweep",
]
