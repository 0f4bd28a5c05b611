"""
Whittle index module for cost-of-AoI scheduling.
"""

from .index import (
    DEFAULT_CAP,
    IndexabilityReport,
    IndexabilityViolation,
    NoSolutionWithinCap,
    ThresholdProfile,
    WhittleIndexValue,
    ascending_charges,
    index_consistency_report,
    index_table,
    nesting_report,
    solve_d1,
    threshold_for_charge,
    threshold_profile,
    whittle_index,
    whittle_index_value,
)
from .state import UeConfig, UeState

__all__ = [
    "DEFAULT_CAP",
    "IndexabilityReport",
    "IndexabilityViolation",
    "NoSolutionWithinCap",
    "ThresholdProfile",
    "UeConfig",
    "UeState",
    "WhittleIndexValue",
    "ascending_charges",
    "index_consistency_report",
    "index_table",
    "nesting_report",
    "solve_d1",
    "threshold_for_charge",
    "threshold_profile",
    "whittle_index",
    "whittle_index_value",
]
