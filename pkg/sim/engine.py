"""
Time-slotted Monte-Carlo simulator of the downlink.

Per slot and per UE: the cost is charged, then the scheduled UE's
transmission succeeds with probability 1-ε, then a packet arrives with
probability λ and replaces whatever is buffered. Each UE owns a Philox stream
keyed by (seed, replication, UE), and two uniforms are consumed per UE per
slot whatever the policy does, so all policies see the same arrivals and
channel realizations.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import stats

from cost import evaluate
from policies import AVAILABLE_POLICIES, FleetView, Scheduler, SchedulerDecision, create_scheduler
from whittle import DEFAULT_CAP, UeConfig, UeState

logger = logging.getLogger(__name__)

# uniforms drawn per UE at a time
DRAW_BLOCK = 65_536
CONFIDENCE_LEVEL = 0.95

CostTiming = Literal["slot_start", "post_transmission"]
TieBreak = Literal["lowest_id", "random"]


class SimulationError(RuntimeError):
    """A failure inside a replication, tagged with where it happened."""

    def __init__(self, message: str, replication: Optional[int] = None, slot: Optional[int] = None):
        super().__init__(message)
        self.replication = replication
        self.slot = slot


class SimConfig(BaseModel):
    """Fleet, horizon and replication settings of one simulation run."""

    model_config = ConfigDict(frozen=True)

    ues: Tuple[UeConfig, ...] = Field(min_length=1)
    horizon: int = Field(ge=1, description="slots simulated per replication (T)")
    warmup: Optional[int] = Field(default=None, ge=0, description="leading slots excluded from averages (W)")
    seed: int = Field(default=0, ge=0, lt=2**64)
    policy: str = "whittle"
    replications: int = Field(default=20, ge=1)
    cost_timing: CostTiming = "slot_start"
    service_charge: float = Field(default=0.0, ge=0.0, description="charge m added per scheduled slot")
    tie_break: TieBreak = "lowest_id"
    workers: int = Field(default=1, ge=1)
    debug_checks: bool = False
    index_cap: int = Field(default=DEFAULT_CAP, ge=1)

    @field_validator("policy")
    @classmethod
    def _known_policy(cls, value: str) -> str:
        if value not in AVAILABLE_POLICIES:
            raise ValueError(f"unknown policy {value!r}, available: {list(AVAILABLE_POLICIES.keys())}")
        return value

    @model_validator(mode="after")
    def _warmup_below_horizon(self) -> "SimConfig":
        if self.warmup is not None and self.warmup >= self.horizon:
            raise ValueError(f"warmup {self.warmup} must be smaller than horizon {self.horizon}")
        return self

    @property
    def effective_warmup(self) -> int:
        """Configured W, else max(1000, T/100), cut to T/10 for short horizons."""
        if self.warmup is not None:
            return self.warmup
        w = max(1000, self.horizon // 100)
        return w if w < self.horizon else self.horizon // 10

    def with_ues(self, ues: Sequence[UeConfig]) -> "SimConfig":
        return self.model_copy(update={"ues": tuple(ues)})


class ReplicationResult(BaseModel):
    replication: int
    mean_cost: float
    per_ue_mean_cost: List[float]
    per_ue_mean_aoi: List[float]
    throughput: float


class SimReport(BaseModel):
    """
    Aggregate over replications. ``mean_cost`` is Ξ averaged over
    replications; the interval is the normal-approximation 95% CI.
    """

    policy: str
    mean_cost: float
    ci_low: float
    ci_high: float
    replications: int
    replication_costs: List[float]
    per_ue_mean_cost: List[float]
    per_ue_mean_aoi: List[float]
    throughput: float
    horizon: int
    warmup: int
    seed: int
    cost_timing: CostTiming

    @property
    def ci_half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


class SlotOutcome(NamedTuple):
    states: Tuple[UeState, ...]
    costs: np.ndarray
    delivered: bool


class FleetRandom:
    """Per-UE arrival/channel streams and a policy stream for one replication."""

    def __init__(self, seed: int, replication: int, n_ues: int, block: int = DRAW_BLOCK):
        self.block = block
        self.ue_streams = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replication, 0, n))))
            for n in range(n_ues)
        ]
        self.policy = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replication, 1)))
        )

    def draws(self, count: int) -> List[List[List[float]]]:
        """``count`` slots of (channel, arrival) uniforms per UE."""
        return [stream.random((count, 2)).tolist() for stream in self.ue_streams]


def _transition(a: int, d: int, success: bool, arrival: bool) -> Tuple[int, int]:
    if success:
        return (1, a) if arrival else (a + 1, 0)
    return (1, a + d) if arrival else (a + 1, d)


def _check_decision(decision: SchedulerDecision, n_ues: int) -> None:
    if decision.ue is not None and not 0 <= decision.ue < n_ues:
        raise ValueError(f"decision schedules UE {decision.ue}, fleet has {n_ues}")


def step(
    configs: Sequence[UeConfig],
    states: Sequence[UeState],
    decision: SchedulerDecision,
    rng: np.random.Generator,
    cost_timing: CostTiming = "slot_start",
    service_charge: float = 0.0,
) -> SlotOutcome:
    """
    Advance every UE by one slot.

    Args:
        configs: Per-UE λ, ε and cost
        states: Per-UE (a, d) at the start of the slot
        decision: Idle or the UE to transmit to
        rng: Source of one (channel, arrival) uniform pair per UE
        cost_timing: Charge v(a+d) before the transmission, or the AoI after it
        service_charge: Added to the scheduled UE's cost

    Returns:
        Next states, the per-UE slot costs and whether a fresher packet was delivered
    """
    n = len(configs)
    if len(states) != n:
        raise ValueError(f"{len(states)} states for {n} UEs")
    _check_decision(decision, n)
    uniforms = rng.random((n, 2))
    next_states = []
    costs = np.zeros(n)
    delivered = False
    for ue, (cfg, state) in enumerate(zip(configs, states)):
        scheduled = decision.ue == ue
        success = scheduled and bool(uniforms[ue, 0] >= cfg.eps)
        arrival = bool(uniforms[ue, 1] < cfg.lam)
        h = state.a if success and cost_timing == "post_transmission" else state.h
        costs[ue] = evaluate(cfg.cost, h) + (service_charge if scheduled else 0.0)
        delivered = delivered or (success and state.d >= 1)
        next_states.append(UeState(*_transition(state.a, state.d, success, arrival)))
    return SlotOutcome(tuple(next_states), costs, delivered)


def _cost_lookup(configs: Sequence[UeConfig]):
    tables: List[Dict[int, float]] = [{} for _ in configs]

    def cost(ue: int, h: int) -> float:
        table = tables[ue]
        value = table.get(h)
        if value is None:
            value = table[h] = evaluate(configs[ue].cost, h)
        return value

    return cost


def _run_replication(config: SimConfig, scheduler: Scheduler, replication: int) -> ReplicationResult:
    configs = config.ues
    n = len(configs)
    warmup = config.effective_warmup
    post = config.cost_timing == "post_transmission"
    charge = config.service_charge
    lams = [cfg.lam for cfg in configs]
    epss = [cfg.eps for cfg in configs]
    cost = _cost_lookup(configs)

    streams = FleetRandom(config.seed, replication, n)
    scheduler.reset()
    scheduler.rng = streams.policy if config.tie_break == "random" else None

    a = [1] * n
    d = [0] * n
    cost_totals = [0.0] * n
    aoi_totals = [0] * n
    deliveries = 0

    slot = 0
    while slot < config.horizon:
        count = min(streams.block, config.horizon - slot)
        block = streams.draws(count)
        for k in range(count):
            slot += 1
            counted = slot > warmup
            try:
                decision = scheduler.decide(FleetView(configs, a, d))
                _check_decision(decision, n)
            except Exception as e:
                logger.error(f"policy {config.policy} failed in replication {replication} at slot {slot}: {e}")
                raise SimulationError(
                    f"replication {replication}, slot {slot}: {type(e).__name__}: {e}",
                    replication=replication,
                    slot=slot,
                ) from e
            chosen = decision.ue
            for ue in range(n):
                u_channel, u_arrival = block[ue][k]
                ai, di = a[ue], d[ue]
                success = chosen == ue and u_channel >= epss[ue]
                arrival = u_arrival < lams[ue]
                if counted:
                    h = ai if success and post else ai + di
                    cost_totals[ue] += cost(ue, h) + (charge if chosen == ue else 0.0)
                    aoi_totals[ue] += ai + di
                    if success and di >= 1:
                        deliveries += 1
                na, nd = _transition(ai, di, success, arrival)
                if config.debug_checks:
                    expected = ai + 1 if success else ai + di + 1
                    if na + nd != expected or na < 1 or nd < 0:
                        raise SimulationError(
                            f"AoI update broken for UE {ue}: ({ai}, {di}) -> ({na}, {nd})",
                            replication=replication,
                            slot=slot,
                        )
                a[ue], d[ue] = na, nd

    slots = config.horizon - warmup
    per_ue_cost = [total / slots for total in cost_totals]
    result = ReplicationResult(
        replication=replication,
        mean_cost=math.fsum(per_ue_cost) / n,
        per_ue_mean_cost=per_ue_cost,
        per_ue_mean_aoi=[total / slots for total in aoi_totals],
        throughput=deliveries / slots,
    )
    logger.debug(f"replication {replication} ({config.policy}): cost {result.mean_cost:.6g}")
    return result


def _confidence_interval(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean
    z = float(stats.norm.ppf(0.5 + CONFIDENCE_LEVEL / 2))
    half = z * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean - half, mean + half


def aggregate(config: SimConfig, policy: str, results: Sequence[ReplicationResult]) -> SimReport:
    """Reduce per-replication results, in replication order, into a SimReport."""
    results = sorted(results, key=lambda r: r.replication)
    costs = np.array([r.mean_cost for r in results])
    ci_low, ci_high = _confidence_interval(costs)
    return SimReport(
        policy=policy,
        mean_cost=float(costs.mean()),
        ci_low=ci_low,
        ci_high=ci_high,
        replications=len(results),
        replication_costs=costs.tolist(),
        per_ue_mean_cost=np.mean([r.per_ue_mean_cost for r in results], axis=0).tolist(),
        per_ue_mean_aoi=np.mean([r.per_ue_mean_aoi for r in results], axis=0).tolist(),
        throughput=float(np.mean([r.throughput for r in results])),
        horizon=config.horizon,
        warmup=config.effective_warmup,
        seed=config.seed,
        cost_timing=config.cost_timing,
    )


def run(
    config: SimConfig,
    policy: Union[str, Scheduler, None] = None,
    table: Any = None,
) -> SimReport:
    """
    Simulate ``config.replications`` independent replications.

    Args:
        config: Fleet and run settings
        policy: Registry name or a ready scheduler; defaults to ``config.policy``
        table: Solved oracle table for the "optimal" policy

    Returns:
        SimReport over slots (W, T] of every replication

    Raises:
        SimulationError: wrapping any policy failure with replication and slot
    """
    if policy is None:
        policy = config.policy
    if isinstance(policy, str):
        scheduler = create_scheduler(policy, config.ues, table=table, d_cap=config.index_cap)
    else:
        scheduler = policy
    name = getattr(scheduler, "name", type(scheduler).__name__)

    replications = range(config.replications)
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_replication, config, scheduler, r) for r in replications]
            results = [f.result() for f in futures]
    else:
        results = [_run_replication(config, scheduler, r) for r in replications]

    report = aggregate(config, name, results)
    logger.info(
        f"{name}: Ξ = {report.mean_cost:.6g} [{report.ci_low:.6g}, {report.ci_high:.6g}] "
        f"over {report.replications} replications of {config.horizon} slots"
    )
    return report


class SweepCell(BaseModel):
    """One grid point × policy; ``error`` is set instead of ``report`` when the run failed."""

    lam: Optional[float] = None
    eps: Optional[float] = None
    policy: str
    report: Optional[SimReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None


def grid_config(base: SimConfig, lam: Optional[float], eps: Optional[float]) -> SimConfig:
    ues = [
        UeConfig(
            lam=ue.lam if lam is None else lam,
            eps=ue.eps if eps is None else eps,
            cost=ue.cost,
        )
        for ue in base.ues
    ]
    return base.with_ues(ues)


def _run_cell(base: SimConfig, lam: Optional[float], eps: Optional[float], policy: str) -> SweepCell:
    try:
        report = run(grid_config(base, lam, eps), policy)
    except Exception as e:
        logger.error(f"sweep cell λ={lam}, ε={eps}, {policy} failed: {e}")
        return SweepCell(lam=lam, eps=eps, policy=policy, error=f"{type(e).__name__}: {e}")
    return SweepCell(lam=lam, eps=eps, policy=policy, report=report)


def sweep(
    base: SimConfig,
    lambdas: Optional[Sequence[float]] = None,
    epsilons: Optional[Sequence[float]] = None,
    policies: Optional[Sequence[str]] = None,
) -> List[SweepCell]:
    """
    Run every (λ, ε, policy) combination. A grid value is applied to every UE;
    an omitted grid keeps each UE's own value.

    Cells run in a process pool when ``base.workers > 1``; the result order is
    λ-major, then ε, then policy, regardless of completion order.
    """
    lam_grid: List[Optional[float]] = list(lambdas) if lambdas is not None else [None]
    eps_grid: List[Optional[float]] = list(epsilons) if epsilons is not None else [None]
    policy_list = list(policies) if policies is not None else [base.policy]
    if not lam_grid or not eps_grid or not policy_list:
        raise ValueError("sweep grid must be non-empty")

    cells = [(lam, eps, policy) for lam in lam_grid for eps in eps_grid for policy in policy_list]
    logger.info(f"sweeping {len(cells)} cells ({len(lam_grid)} λ × {len(eps_grid)} ε × {len(policy_list)} policies)")
    if base.workers > 1 and len(cells) > 1:
        serial = base.model_copy(update={"workers": 1})
        with ProcessPoolExecutor(max_workers=base.workers) as pool:
            futures = [pool.submit(_run_cell, serial, lam, eps, policy) for lam, eps, policy in cells]
            return [f.result() for f in futures]
    return [_run_cell(base, lam, eps, policy) for lam, eps, policy in cells]
