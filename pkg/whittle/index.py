"""
Closed-form Whittle index for the cost of AoI with stochastic packet
generation and unreliable transmissions, its D1 solver, the threshold
profile it induces for a given service charge, and the idle-set nesting
verdict shared with the value-iteration indexability check.
"""

import logging
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cost import CostFunction, partial_sum
from series import SeriesContext, create_series_context, omega, psi, theta

from .state import UeState

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10_000
# an index counts as reaching a charge m when it is >= m - INDEX_SLACK
INDEX_SLACK = 1e-12

BRANCH_EMPTY = "d=0"
BRANCH_FIRST = "a=1"
BRANCH_LOW = "2<=a<=D1"
BRANCH_HIGH = "a>D1"


class NoSolutionWithinCap(RuntimeError):
    """Raised when a threshold search runs past its configured cap."""


class WhittleIndexValue(BaseModel):
    """A Whittle index together with what it was computed for."""

    model_config = ConfigDict(frozen=True)

    index: float
    a: int
    d: int
    lam: float
    eps: float
    cost: CostFunction
    d1: Optional[int] = None
    branch: str


class ThresholdProfile(BaseModel):
    """Thresholds D_a, a = 1..A_max, of the decoupled threshold policy at charge m."""

    charge: float = Field(ge=0.0)
    thresholds: List[int]

    def threshold(self, a: int) -> int:
        return self.thresholds[a - 1]

    @property
    def is_monotone(self) -> bool:
        return all(lo <= hi for lo, hi in zip(self.thresholds, self.thresholds[1:]))


class IndexabilityViolation(BaseModel):
    """State idle at the lower charge but not at the higher one."""

    lower_charge: float
    higher_charge: float
    a: int
    d: int


class IndexabilityReport(BaseModel):
    passed: bool
    charges: List[float]
    idle_counts: List[int]
    violations: List[IndexabilityViolation] = Field(default_factory=list)


@lru_cache(maxsize=4096)
def _context(lam: float, eps: float, cost: CostFunction) -> SeriesContext:
    return create_series_context(lam, eps, cost)


def _first_branch(ctx: SeriesContext, depth: int) -> float:
    """(1-ε)(λ(1-ε) D ω(D) - Σ_{h=1}^{D} v(h))."""
    lam, eps = ctx.lam, ctx.eps
    return (1.0 - eps) * (
        lam * (1.0 - eps) * depth * omega(ctx, depth) - partial_sum(ctx.cost, depth)
    )


def _low_branch(ctx: SeriesContext, a: int, d: int, d1: int) -> float:
    """
    Charge that makes (a, d) indifferent when the a = 1 threshold is D1.

    The average cost comes from the indifference condition at (a, d),
    J = (λε ω(a+d) + ψ(a+d) - ε θ(D1+1) + Σ_{h=1}^{a-1} v(h)) / (a + 1/λ - 1),
    and the charge from J = (m/(1-ε) + Σ_{h=1}^{D1} v(h)) / D1. Clamped at 0.
    """
    lam, eps, v = ctx.lam, ctx.eps, ctx.cost
    average = (
        lam * eps * omega(ctx, a + d)
        + psi(ctx, a + d)
        - eps * theta(ctx, d1 + 1)
        + partial_sum(v, a - 1)
    ) / (a + 1.0 / lam - 1.0)
    return max(0.0, (1.0 - eps) * (d1 * average - partial_sum(v, d1)))


def _high_branch(ctx: SeriesContext, a: int, d: int) -> float:
    """(1-ε)(ψ(a+d) - ψ(a) + λε(ω(a+d) - ω(a)))."""
    lam, eps = ctx.lam, ctx.eps
    return (1.0 - eps) * (
        psi(ctx, a + d) - psi(ctx, a) + lam * eps * (omega(ctx, a + d) - omega(ctx, a))
    )


def _solve_d1(ctx: SeriesContext, a: int, d: int, d_cap: int) -> int:
    lam, eps = ctx.lam, ctx.eps
    rhs = lam * eps * omega(ctx, a + d) + psi(ctx, a + d) + partial_sum(ctx.cost, a - 1)
    weight = lam * (1.0 - eps) * (a + 1.0 / lam - 1.0)
    slack = 1e-12 * max(1.0, abs(rhs))

    def reaches(depth: int) -> bool:
        return eps * theta(ctx, depth + 1) + weight * omega(ctx, depth) >= rhs - slack

    if reaches(1):
        return 1
    # LHS is non-decreasing in D1: gallop to a bracket, then bisect
    lo, hi = 1, 2
    while not reaches(hi):
        if hi >= d_cap:
            raise NoSolutionWithinCap(
                f"D1 exceeds cap {d_cap} for a={a}, d={d}, λ={lam}, ε={eps}, {ctx.cost.label}"
            )
        lo, hi = hi, min(2 * hi, d_cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return hi


def solve_d1(
    lam: float, eps: float, v: CostFunction, a: int, d: int, d_cap: int = DEFAULT_CAP
) -> int:
    """
    Smallest positive integer D1 with
    ε θ(D1+1) + λ(1-ε)(a + 1/λ - 1) ω(D1) >= λε ω(a+d) + ψ(a+d) + Σ_{h=1}^{a-1} v(h).

    Args:
        lam: Packet generation probability, 0 < λ <= 1
        eps: Transmission error probability, 0 <= ε < 1
        v: Cost function
        a: Queuing delay, a >= 2 (for a = 1 the threshold is d itself)
        d: Staleness gap, d >= 1
        d_cap: Largest D1 considered

    Raises:
        NoSolutionWithinCap: if the left side stays below the right side up to ``d_cap``
    """
    if a < 2:
        raise ValueError(f"solve_d1 needs a >= 2 (D1 = d when a = 1), got a={a}")
    if d < 1:
        raise ValueError(f"solve_d1 needs d >= 1, got d={d}")
    return _solve_d1(_context(lam, eps, v), a, d, d_cap)


@lru_cache(maxsize=1_000_000)
def _index_entry(
    lam: float, eps: float, v: CostFunction, a: int, d: int, d_cap: int
) -> Tuple[float, Optional[int], str]:
    if d == 0:
        return 0.0, None, BRANCH_EMPTY
    ctx = _context(lam, eps, v)
    if a == 1:
        return _first_branch(ctx, d), d, BRANCH_FIRST
    d1 = _solve_d1(ctx, a, d, d_cap)
    if a <= d1:
        return _low_branch(ctx, a, d, d1), d1, BRANCH_LOW
    return _high_branch(ctx, a, d), d1, BRANCH_HIGH


def whittle_index_value(
    lam: float, eps: float, v: CostFunction, a: int, d: int, d_cap: int = DEFAULT_CAP
) -> float:
    """Bare index value for state (a, d); the fast path used by schedulers."""
    return _index_entry(lam, eps, v, a, d, d_cap)[0]


def whittle_index(
    lam: float, eps: float, v: CostFunction, state: UeState, d_cap: int = DEFAULT_CAP
) -> WhittleIndexValue:
    """
    Whittle index of a UE in ``state``.

    Args:
        lam: Packet generation probability, 0 < λ <= 1
        eps: Transmission error probability, 0 <= ε < 1
        v: Cost function
        state: Current (a, d)
        d_cap: Cap for the D1 search

    Returns:
        The index with the D1 and formula branch that produced it
    """
    value, d1, branch = _index_entry(lam, eps, v, state.a, state.d, d_cap)
    return WhittleIndexValue(
        index=value, a=state.a, d=state.d, lam=lam, eps=eps, cost=v, d1=d1, branch=branch
    )


def threshold_for_charge(
    lam: float, eps: float, v: CostFunction, m: float, a: int, d_cap: int = DEFAULT_CAP
) -> int:
    """
    Threshold D_a at service charge ``m``: the smallest d >= 0 whose index reaches m.

    Where the index is flat in d the result is the first d of the plateau, so
    charging the index of a state inside it does not give that state back.
    Step costs v(h) = 1{h >= H} do this at a = 1 from d = H-1 on, where the
    index stays at (1-ε)(H-1).

    Raises:
        NoSolutionWithinCap: if no d <= ``d_cap`` reaches m
    """
    if m < 0:
        raise ValueError(f"service charge must be non-negative, got {m}")
    if a < 1:
        raise ValueError(f"queuing delay must be >= 1, got a={a}")
    for d in range(d_cap + 1):
        if _index_entry(lam, eps, v, a, d, d_cap)[0] >= m - INDEX_SLACK:
            return d
    raise NoSolutionWithinCap(
        f"no d <= {d_cap} reaches charge {m} at a={a} (λ={lam}, ε={eps}, {v.label})"
    )


def threshold_profile(
    lam: float, eps: float, v: CostFunction, m: float, a_max: int, d_cap: int = DEFAULT_CAP
) -> ThresholdProfile:
    """Thresholds D_1..D_{a_max} at charge ``m``."""
    thresholds = [threshold_for_charge(lam, eps, v, m, a, d_cap) for a in range(1, a_max + 1)]
    return ThresholdProfile(charge=m, thresholds=thresholds)


def index_table(
    lam: float, eps: float, v: CostFunction, a_max: int, d_max: int, d_cap: int = DEFAULT_CAP
) -> np.ndarray:
    """Indices for 1 <= a <= a_max, 0 <= d <= d_max; entry [a-1, d]."""
    table = np.zeros((a_max, d_max + 1))
    for a in range(1, a_max + 1):
        for d in range(d_max + 1):
            table[a - 1, d] = _index_entry(lam, eps, v, a, d, d_cap)[0]
    return table


def nesting_report(
    charges: Sequence[float],
    a_values: Sequence[int],
    d_values: Sequence[int],
    idle_sets: Sequence[np.ndarray],
    label: str,
) -> IndexabilityReport:
    """
    Verdict on idle sets, one boolean [a, d] mask per charge, that must only
    grow along ascending ``charges``.
    """
    violations = []
    for k in range(1, len(charges)):
        broken = idle_sets[k - 1] & ~idle_sets[k]
        for i, j in zip(*np.nonzero(broken)):
            violations.append(
                IndexabilityViolation(
                    lower_charge=charges[k - 1],
                    higher_charge=charges[k],
                    a=int(a_values[i]),
                    d=int(d_values[j]),
                )
            )
    if violations:
        logger.warning(f"indexability check found {len(violations)} violations ({label})")
    return IndexabilityReport(
        passed=not violations,
        charges=list(charges),
        idle_counts=[int(s.sum()) for s in idle_sets],
        violations=violations,
    )


def ascending_charges(m_grid: Sequence[float]) -> List[float]:
    charges = [float(m) for m in m_grid]
    if any(lo > hi for lo, hi in zip(charges, charges[1:])):
        raise ValueError("m_grid must be ascending")
    if charges and charges[0] < 0:
        raise ValueError(f"service charges must be non-negative, got {charges[0]}")
    return charges


def index_consistency_report(
    lam: float,
    eps: float,
    v: CostFunction,
    m_grid: Sequence[float],
    a_range: Sequence[int],
    d_range: Sequence[int],
    d_cap: int = DEFAULT_CAP,
) -> IndexabilityReport:
    """
    Idle sets {(a, d): d < D_a(m)} induced by the closed-form index.

    These nest for any index function, so this only checks that the
    thresholds are read off the index consistently; indexability itself is
    judged on value iteration by ``oracle.indexability_report``. Thresholds
    are searched within ``d_range``; a row with no d reaching m is idle on
    the whole range.
    """
    charges = ascending_charges(m_grid)
    a_values = sorted(a_range)
    d_values = np.array(sorted(d_range))
    indices = np.array(
        [[_index_entry(lam, eps, v, a, int(d), d_cap)[0] for d in d_values] for a in a_values]
    )

    idle_sets = []
    for m in charges:
        reached = indices >= m - INDEX_SLACK
        first = np.where(reached.any(axis=1), reached.argmax(axis=1), len(d_values))
        thresholds = np.where(first < len(d_values), d_values[np.minimum(first, len(d_values) - 1)], np.inf)
        idle_sets.append(d_values[None, :] < thresholds[:, None])
    return nesting_report(charges, a_values, d_values, idle_sets, f"closed form, {v.label}, λ={lam}, ε={eps}")
