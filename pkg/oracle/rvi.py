"""
Relative value iteration on the decoupled single-UE MDP with service charge m,
and the Whittle index recovered by bisection on m.

State (a, d) with 1 <= a <= A_max and 0 <= d <= D_max; coordinates that
would leave the grid are clamped to the cap. The Bellman operator is

    μ0(a,d) = v(a+d) + λ f(1, a+d) + (1-λ) f(a+1, d)
    μ1(a,d) = m + ε μ0(a,d) + (1-ε) (v(a) + λ f(1, a) + (1-λ) f(a+1, 0))

and f is anchored at f(1, 0) = 0.
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cost import CostFunction, evaluate_many, validate
from whittle import UeState, whittle_index_value

logger = logging.getLogger(__name__)

DEFAULT_CAP = 64
DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_SWEEPS = 100_000
# damped update f <- f + β (Tf - f - anchor); β < 1 handles periodic chains
DEFAULT_DAMPING = 0.5
# relative action-value gap below which both actions count as equally appealing
INDIFFERENCE_TOLERANCE = 0.02


class NotConverged(RuntimeError):
    """Raised when value iteration stops at its sweep limit."""


class NoFlip(RuntimeError):
    """Raised when a state is still scheduled at the largest charge tried."""


class DecoupledMdp(BaseModel):
    """Single-UE MDP obtained by charging m per transmission."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(gt=0.0, le=1.0)
    eps: float = Field(ge=0.0, lt=1.0)
    cost: CostFunction
    charge: float = Field(default=0.0, ge=0.0)
    a_max: int = Field(default=DEFAULT_CAP, ge=2)
    d_max: int = Field(default=DEFAULT_CAP, ge=2)
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0.0)
    max_sweeps: int = Field(default=DEFAULT_MAX_SWEEPS, ge=1)
    damping: float = Field(default=DEFAULT_DAMPING, gt=0.0, le=1.0)


class ValueTable(BaseModel):
    """
    Relative values f(a, d), stored at [a-1, d], with the average cost J*
    and the greedy action per state.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mdp: DecoupledMdp
    relative_values: np.ndarray
    idle_values: np.ndarray
    schedule_values: np.ndarray
    schedule: np.ndarray
    average_cost: float
    residual_span: float
    sweeps: int

    def value(self, a: int, d: int) -> float:
        return float(self.relative_values[a - 1, d])

    def action(self, a: int, d: int) -> bool:
        """True when scheduling is the greedy action at (a, d)."""
        return bool(self.schedule[a - 1, d])

    def is_indifferent(self, a: int, d: int, tolerance: float = INDIFFERENCE_TOLERANCE) -> bool:
        mu0 = self.idle_values[a - 1, d]
        mu1 = self.schedule_values[a - 1, d]
        return abs(mu0 - mu1) <= tolerance * max(abs(mu0), abs(mu1), 1e-12)

    def greedy_thresholds(self) -> List[int]:
        """D_a per a: the smallest d scheduled by the greedy policy, D_max + 1 if none."""
        scheduled = self.schedule
        first = np.where(scheduled.any(axis=1), scheduled.argmax(axis=1), self.mdp.d_max + 1)
        return [int(x) for x in first]

    def is_threshold_type(self) -> bool:
        """Every row idles below its threshold and schedules from it on."""
        thresholds = self.greedy_thresholds()
        d = np.arange(self.mdp.d_max + 1)
        expected = d[None, :] >= np.array(thresholds)[:, None]
        return bool(np.array_equal(expected, self.schedule))

    def bellman_residual_span(self) -> float:
        """Span of Tf - f, recomputed with one extra sweep."""
        mu0, mu1 = _action_values(_Model(self.mdp), self.relative_values)
        residual = np.minimum(mu0, mu1) - self.relative_values
        return float(residual.max() - residual.min())

    def action_for(self, a, d) -> int:
        """Simulator lookup: 1 to schedule the single UE, 0 to idle."""
        if len(a) != 1:
            raise ValueError(f"a decoupled table drives exactly one UE, got {len(a)}")
        ai, di = int(a[0]), int(d[0])
        if ai > self.mdp.a_max or di > self.mdp.d_max:
            raise IndexError(f"state ({ai}, {di}) outside table caps ({self.mdp.a_max}, {self.mdp.d_max})")
        return 1 if self.schedule[ai - 1, di] else 0


class _Model:
    """Precomputed costs and clamped successor coordinates of a DecoupledMdp."""

    def __init__(self, mdp: DecoupledMdp):
        a = np.arange(1, mdp.a_max + 1)[:, None]
        d = np.arange(mdp.d_max + 1)[None, :]
        self.mdp = mdp
        self.cost_idle = evaluate_many(mdp.cost, a + d)
        self.cost_success = np.broadcast_to(evaluate_many(mdp.cost, a), self.cost_idle.shape)
        self.next_row = np.minimum(a, mdp.a_max - 1)[:, 0]
        self.reset_col_idle = np.minimum(a + d, mdp.d_max)
        self.reset_col_success = np.minimum(a, mdp.d_max)[:, 0]


def _action_values(model: _Model, f: np.ndarray):
    mdp = model.mdp
    lam, eps = mdp.lam, mdp.eps
    mu0 = model.cost_idle + lam * f[0, model.reset_col_idle] + (1.0 - lam) * f[model.next_row, :]
    success = (
        model.cost_success
        + lam * f[0, model.reset_col_success][:, None]
        + (1.0 - lam) * f[model.next_row, 0][:, None]
    )
    mu1 = mdp.charge + eps * mu0 + (1.0 - eps) * success
    return mu0, mu1


def _greedy_schedule(mu0: np.ndarray, mu1: np.ndarray) -> np.ndarray:
    # ties go to idling
    return mu1 < mu0 - 1e-12 * np.maximum(1.0, np.abs(mu0))


def rvi_solve(mdp: DecoupledMdp, initial: Optional[np.ndarray] = None) -> ValueTable:
    """
    Solve the decoupled MDP by relative value iteration.

    Args:
        mdp: Model with caps, tolerance and sweep limit
        initial: Optional warm start for f (shape A_max x (D_max+1))

    Returns:
        ValueTable with span(Tf - f) <= mdp.tolerance

    Raises:
        NotConverged: if the sweep limit is reached first
    """
    validate(mdp.cost, mdp.lam, mdp.eps)
    model = _Model(mdp)
    shape = (mdp.a_max, mdp.d_max + 1)
    f = np.zeros(shape) if initial is None else np.array(initial, dtype=float)
    f = f - f[0, 0]

    span = np.inf
    for sweep in range(1, mdp.max_sweeps + 1):
        mu0, mu1 = _action_values(model, f)
        residual = np.minimum(mu0, mu1) - f
        span = float(residual.max() - residual.min())
        if span <= mdp.tolerance:
            logger.debug(f"RVI converged in {sweep} sweeps (m={mdp.charge:.6g}, span={span:.3e})")
            return ValueTable(
                mdp=mdp,
                relative_values=f,
                idle_values=mu0,
                schedule_values=mu1,
                schedule=_greedy_schedule(mu0, mu1),
                average_cost=float(residual[0, 0]),
                residual_span=span,
                sweeps=sweep,
            )
        f = f + mdp.damping * (residual - residual[0, 0])

    logger.error(f"RVI did not converge: span {span:.3e} after {mdp.max_sweeps} sweeps")
    raise NotConverged(
        f"relative value iteration stopped at span {span:.3e} > {mdp.tolerance} "
        f"after {mdp.max_sweeps} sweeps; raise the caps or loosen the tolerance"
    )


def index_by_bisection(
    lam: float,
    eps: float,
    v: CostFunction,
    state: UeState,
    m_hi: Optional[float] = None,
    a_max: int = DEFAULT_CAP,
    d_max: int = DEFAULT_CAP,
    tolerance: float = DEFAULT_TOLERANCE,
    relative_precision: float = 1e-4,
    max_doublings: int = 30,
) -> float:
    """
    Charge at which the greedy action at ``state`` flips from schedule to idle.

    The bracket starts at [0, 2 * closed-form index] (or [0, 1]) and its upper
    end is doubled until the state idles.

    Raises:
        NoFlip: if the state is still scheduled after ``max_doublings`` doublings
        NotConverged: propagated from rvi_solve
    """
    if state.d < 1:
        raise ValueError(f"index by bisection needs d >= 1, got d={state.d}")

    def solve(charge: float, warm: Optional[np.ndarray]) -> ValueTable:
        mdp = DecoupledMdp(
            lam=lam, eps=eps, cost=v, charge=charge, a_max=a_max, d_max=d_max, tolerance=tolerance
        )
        return rvi_solve(mdp, initial=warm)

    if m_hi is None:
        closed = whittle_index_value(lam, eps, v, state.a, state.d)
        m_hi = 2.0 * closed if closed > 0 else 1.0

    table = solve(0.0, None)
    if not table.action(state.a, state.d):
        return 0.0
    warm = table.relative_values

    for _ in range(max_doublings):
        table = solve(m_hi, warm)
        if not table.action(state.a, state.d):
            break
        m_hi *= 2.0
    else:
        raise NoFlip(
            f"state ({state.a}, {state.d}) is still scheduled at m={m_hi}; the caps are probably too small"
        )

    lo, hi = 0.0, m_hi
    precision = relative_precision * m_hi
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        table = solve(mid, warm)
        warm = table.relative_values
        if table.action(state.a, state.d):
            lo = mid
        else:
            hi = mid
    m_star = 0.5 * (lo + hi)
    logger.info(f"bisection index at ({state.a}, {state.d}) for λ={lam}, ε={eps}, {v.label}: {m_star:.6g}")
    return m_star
