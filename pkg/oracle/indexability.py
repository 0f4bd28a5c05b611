"""
Indexability judged on value iteration: the greedy idle set of the decoupled
MDP must only grow as the service charge rises.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from cost import CostFunction
from whittle import IndexabilityReport, ascending_charges, nesting_report

from .rvi import DEFAULT_CAP, DEFAULT_TOLERANCE, DecoupledMdp, rvi_solve

logger = logging.getLogger(__name__)


def indexability_report(
    lam: float,
    eps: float,
    v: CostFunction,
    m_grid: Sequence[float],
    a_range: Sequence[int],
    d_range: Sequence[int],
    cap: Optional[int] = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> IndexabilityReport:
    """
    Check that the idle sets {(a, d): RVI idles at (a, d) under charge m} are
    nested along ascending ``m_grid``.

    States with d = 0 are left out: they carry nothing to deliver and idle at
    every charge.

    Args:
        lam: Packet generation probability
        eps: Transmission error probability
        v: Cost function
        m_grid: Ascending service charges
        a_range: Queuing delays to inspect
        d_range: Staleness gaps to inspect
        cap: Table cap for a and d; defaults to the larger of 64 and twice the largest inspected coordinate
        tolerance: RVI span tolerance

    Raises:
        ValueError: if ``m_grid`` is not ascending or a range leaves the table
    """
    charges = ascending_charges(m_grid)
    a_values = sorted(a_range)
    d_values = [d for d in sorted(d_range) if d >= 1]
    if not a_values or a_values[0] < 1:
        raise ValueError("a_range must hold queuing delays >= 1")
    if cap is None:
        cap = max(DEFAULT_CAP, 2 * max(a_values + d_values))
    if a_values[-1] > cap or (d_values and d_values[-1] > cap):
        raise ValueError(f"ranges exceed the table cap {cap}")

    rows = np.array(a_values) - 1
    cols = np.array(d_values, dtype=int)
    idle_sets = []
    warm = None
    for m in charges:
        table = rvi_solve(
            DecoupledMdp(lam=lam, eps=eps, cost=v, charge=m, a_max=cap, d_max=cap, tolerance=tolerance),
            initial=warm,
        )
        warm = table.relative_values
        idle_sets.append(~table.schedule[np.ix_(rows, cols)])
        logger.debug(f"m={m:.6g}: {int(idle_sets[-1].sum())} idle states")
    return nesting_report(charges, a_values, d_values, idle_sets, f"value iteration, {v.label}, λ={lam}, ε={eps}")
