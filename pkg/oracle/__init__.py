"""
Ground-truth solvers: relative value iteration for the decoupled single-UE
MDP, Whittle index by bisection on the service charge, and the joint optimum
for a handful of UEs, plus the indexability check built on value iteration.
"""

from .indexability import indexability_report
from .joint import CapacityExceeded, JointMdp, JointPolicy, joint_rvi_solve
from .rvi import (
    DecoupledMdp,
    NoFlip,
    NotConverged,
    ValueTable,
    index_by_bisection,
    rvi_solve,
)

__all__ = [
    "CapacityExceeded",
    "DecoupledMdp",
    "JointMdp",
    "JointPolicy",
    "NoFlip",
    "NotConverged",
    "ValueTable",
    "index_by_bisection",
    "indexability_report",
    "joint_rvi_solve",
    "rvi_solve",
]
