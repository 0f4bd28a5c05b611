"""
Relative value iteration on the joint N-UE scheduling MDP (small N only).

The joint state is one (a, d) per UE; the action idles or schedules exactly
one UE. Each UE's transition matrix is applied along its own axis of the
value tensor, so a sweep costs O(N * S^(N+1)) for S states per UE.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cost import evaluate_many, validate
from whittle import UeConfig

from .rvi import DEFAULT_DAMPING, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE, NotConverged

logger = logging.getLogger(__name__)

MAX_UES = 3
# product state spaces above this size are refused
DEFAULT_MAX_STATES = 2_000_000


class CapacityExceeded(RuntimeError):
    """Raised when the joint state space is larger than the configured limit."""


class JointMdp(BaseModel):
    """Joint scheduling problem for N <= 3 UEs sharing one transmission per slot."""

    model_config = ConfigDict(frozen=True)

    ues: Tuple[UeConfig, ...] = Field(min_length=1, max_length=MAX_UES)
    a_max: int = Field(default=12, ge=2)
    d_max: int = Field(default=12, ge=2)
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0.0)
    max_sweeps: int = Field(default=DEFAULT_MAX_SWEEPS, ge=1)
    damping: float = Field(default=DEFAULT_DAMPING, gt=0.0, le=1.0)
    max_states: int = Field(default=DEFAULT_MAX_STATES, ge=1)

    @property
    def states_per_ue(self) -> int:
        return self.a_max * (self.d_max + 1)

    @property
    def joint_states(self) -> int:
        return self.states_per_ue ** len(self.ues)


class JointPolicy(BaseModel):
    """
    Optimal stationary policy of a JointMdp.

    ``actions`` has one axis per UE indexed by (a-1)*(D_max+1) + d; entry 0
    idles and entry k schedules UE k-1.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mdp: JointMdp
    actions: np.ndarray
    average_cost: float
    residual_span: float
    sweeps: int

    def state_index(self, a: int, d: int) -> int:
        return (a - 1) * (self.mdp.d_max + 1) + d

    def action_for(self, a: Sequence[int], d: Sequence[int]) -> int:
        if len(a) != len(self.mdp.ues):
            raise ValueError(f"policy solved for {len(self.mdp.ues)} UEs, got {len(a)}")
        key = []
        for ai, di in zip(a, d):
            if ai > self.mdp.a_max or di > self.mdp.d_max:
                raise IndexError(
                    f"state ({ai}, {di}) outside table caps ({self.mdp.a_max}, {self.mdp.d_max})"
                )
            key.append(self.state_index(int(ai), int(di)))
        return int(self.actions[tuple(key)])


def _ue_matrices(ue: UeConfig, a_max: int, d_max: int):
    """Idle and schedule transition matrices plus expected stage costs for one UE."""
    width = d_max + 1
    size = a_max * width
    idle = np.zeros((size, size))
    sched = np.zeros((size, size))
    cost_idle = np.zeros(size)
    cost_sched = np.zeros(size)
    lam, eps = ue.lam, ue.eps

    def index(a: int, d: int) -> int:
        return (min(a, a_max) - 1) * width + min(d, d_max)

    for a in range(1, a_max + 1):
        for d in range(d_max + 1):
            s = index(a, d)
            idle[s, index(1, a + d)] += lam
            idle[s, index(a + 1, d)] += 1.0 - lam
            sched[s, :] += eps * idle[s, :]
            sched[s, index(1, a)] += (1.0 - eps) * lam
            sched[s, index(a + 1, 0)] += (1.0 - eps) * (1.0 - lam)
    a_grid = np.repeat(np.arange(1, a_max + 1), width)
    d_grid = np.tile(np.arange(d_max + 1), a_max)
    cost_idle[:] = evaluate_many(ue.cost, a_grid + d_grid)
    cost_sched[:] = eps * cost_idle + (1.0 - eps) * evaluate_many(ue.cost, a_grid)
    return idle, sched, cost_idle, cost_sched


def _apply(matrix: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
    """Expectation of ``values`` over the next state of the UE on ``axis``."""
    moved = np.tensordot(matrix, values, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


def _broadcast(vector: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = vector.size
    return vector.reshape(shape)


def joint_rvi_solve(mdp: JointMdp) -> JointPolicy:
    """
    Solve the joint MDP; the reported average cost is per slot and per UE.

    Raises:
        CapacityExceeded: if the product state space exceeds ``mdp.max_states``
        NotConverged: if the sweep limit is reached first
    """
    n = len(mdp.ues)
    if mdp.joint_states > mdp.max_states:
        raise CapacityExceeded(
            f"{n} UEs with caps ({mdp.a_max}, {mdp.d_max}) give {mdp.joint_states} joint states, "
            f"limit is {mdp.max_states}"
        )
    for ue in mdp.ues:
        validate(ue.cost, ue.lam, ue.eps)

    parts = [_ue_matrices(ue, mdp.a_max, mdp.d_max) for ue in mdp.ues]
    idle_cost = sum(_broadcast(p[2], k, n) for k, p in enumerate(parts)) / n
    action_costs: List[np.ndarray] = [idle_cost]
    for k, p in enumerate(parts):
        delta = _broadcast(p[3] - p[2], k, n) / n
        action_costs.append(idle_cost + delta)

    shape = (mdp.states_per_ue,) * n
    anchor = (0,) * n
    f = np.zeros(shape)
    span = np.inf
    for sweep in range(1, mdp.max_sweeps + 1):
        q = []
        for action in range(n + 1):
            expected = f
            for k, p in enumerate(parts):
                matrix = p[1] if action == k + 1 else p[0]
                expected = _apply(matrix, expected, k)
            q.append(action_costs[action] + expected)
        q = np.stack(q)
        best = q.min(axis=0)
        residual = best - f
        span = float(residual.max() - residual.min())
        if span <= mdp.tolerance:
            logger.info(
                f"joint RVI for {n} UEs converged in {sweep} sweeps, "
                f"average cost {residual[anchor]:.6g}"
            )
            return JointPolicy(
                mdp=mdp,
                actions=q.argmin(axis=0),
                average_cost=float(residual[anchor]),
                residual_span=span,
                sweeps=sweep,
            )
        f = f + mdp.damping * (residual - residual[anchor])

    logger.error(f"joint RVI did not converge: span {span:.3e} after {mdp.max_sweeps} sweeps")
    raise NotConverged(
        f"joint value iteration stopped at span {span:.3e} > {mdp.tolerance} after {mdp.max_sweeps} sweeps"
    )
