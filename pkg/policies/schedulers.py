"""
Downlink schedulers.
Each slot a scheduler looks at every UE's (a, d) and either idles or picks
exactly one UE to transmit to.
"""

import logging
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from whittle import DEFAULT_CAP, UeConfig, UeState, whittle_index_value

logger = logging.getLogger(__name__)


class OutOfTable(LookupError):
    """Raised when a tabulated policy is asked about a state beyond its caps."""


class UnknownPolicy(ValueError):
    """Raised for a policy name missing from AVAILABLE_POLICIES."""


class SchedulerDecision(NamedTuple):
    """Idle when ``ue`` is None, otherwise schedule UE ``ue`` (0-based id)."""

    ue: Optional[int] = None

    @property
    def is_idle(self) -> bool:
        return self.ue is None

    @classmethod
    def schedule(cls, ue: int) -> "SchedulerDecision":
        return cls(ue)


IDLE = SchedulerDecision()


class FleetView(NamedTuple):
    """Per-UE configuration and (a, d) at the decision instant."""

    configs: Tuple[UeConfig, ...]
    a: Sequence[int]
    d: Sequence[int]

    def __len__(self) -> int:
        return len(self.configs)

    def state(self, ue: int) -> UeState:
        return UeState(int(self.a[ue]), int(self.d[ue]))

    @classmethod
    def of(cls, configs: Sequence[UeConfig], states: Sequence[UeState]) -> "FleetView":
        return cls(tuple(configs), [s.a for s in states], [s.d for s in states])


def _pick(
    scores: Sequence[float], eligible: Sequence[bool], rng: Optional[np.random.Generator] = None
) -> Optional[int]:
    """Highest-scoring eligible UE; ties go to the lowest id, or uniformly at random with ``rng``."""
    best = None
    candidates: List[int] = []
    for ue, (score, ok) in enumerate(zip(scores, eligible)):
        if not ok:
            continue
        if best is None or score > best:
            best = score
            candidates = [ue]
        elif score == best:
            candidates.append(ue)
    if not candidates:
        return None
    if rng is not None and len(candidates) > 1:
        return candidates[int(rng.integers(len(candidates)))]
    return candidates[0]


def _require_fleet(view: FleetView) -> None:
    if len(view) == 0:
        raise ValueError("fleet view must contain at least one UE")


# ------------------------
# Policy functions
# ------------------------

def whittle_policy(
    view: FleetView,
    rng: Optional[np.random.Generator] = None,
    d_cap: int = DEFAULT_CAP,
    index: Optional[Callable[[int, int, int], float]] = None,
) -> SchedulerDecision:
    """Schedule the UE with the largest Whittle index; idle when every index is 0."""
    _require_fleet(view)
    if index is None:
        def index(ue: int, a: int, d: int) -> float:
            cfg = view.configs[ue]
            return whittle_index_value(cfg.lam, cfg.eps, cfg.cost, a, d, d_cap)
    scores = [index(ue, int(view.a[ue]), int(view.d[ue])) for ue in range(len(view))]
    chosen = _pick(scores, [s > 0.0 for s in scores], rng)
    return IDLE if chosen is None else SchedulerDecision.schedule(chosen)


def age_greedy_policy(view: FleetView, rng: Optional[np.random.Generator] = None) -> SchedulerDecision:
    """Schedule the largest AoI among UEs holding a fresher packet than delivered."""
    _require_fleet(view)
    scores = [int(a) + int(d) for a, d in zip(view.a, view.d)]
    chosen = _pick(scores, [int(d) >= 1 for d in view.d], rng)
    return IDLE if chosen is None else SchedulerDecision.schedule(chosen)


def on_demand_whittle_policy(
    view: FleetView,
    rng: Optional[np.random.Generator] = None,
    d_cap: int = DEFAULT_CAP,
    index: Optional[Callable[[int, int, int], float]] = None,
) -> SchedulerDecision:
    """Whittle index computed as if packets were generated every slot (λ = 1), among UEs with d >= 1."""
    _require_fleet(view)
    if index is None:
        def index(ue: int, a: int, d: int) -> float:
            cfg = view.configs[ue]
            return whittle_index_value(1.0, cfg.eps, cfg.cost, a, d, d_cap)
    eligible = [int(d) >= 1 for d in view.d]
    scores = [
        index(ue, int(view.a[ue]), int(view.d[ue])) if eligible[ue] else 0.0
        for ue in range(len(view))
    ]
    chosen = _pick(scores, eligible, rng)
    return IDLE if chosen is None else SchedulerDecision.schedule(chosen)


def optimal_policy(view: FleetView, table: Any) -> SchedulerDecision:
    """
    Look up the tabulated action for the joint state.

    ``table`` is an oracle JointPolicy, or a ValueTable for a single UE.
    """
    _require_fleet(view)
    try:
        action = table.action_for(view.a, view.d)
    except IndexError as e:
        raise OutOfTable(str(e)) from e
    return IDLE if action == 0 else SchedulerDecision.schedule(action - 1)


def round_robin_policy(view: FleetView, cursor: int = 0) -> Tuple[SchedulerDecision, int]:
    """
    Serve the first UE with d >= 1 at or after ``cursor`` in cyclic order.

    Returns:
        The decision and the cursor for the next slot
    """
    _require_fleet(view)
    n = len(view)
    for step in range(n):
        ue = (cursor + step) % n
        if int(view.d[ue]) >= 1:
            return SchedulerDecision.schedule(ue), (ue + 1) % n
    return IDLE, cursor % n


# ------------------------
# Stateful schedulers used by the simulator
# ------------------------

class Scheduler:
    """Base scheduler: one instance per simulator replication."""

    name = "scheduler"

    def __init__(self, configs: Sequence[UeConfig], rng: Optional[np.random.Generator] = None):
        self.configs = tuple(configs)
        self.rng = rng

    def reset(self) -> None:
        """Clear per-replication state."""

    def decide(self, view: FleetView) -> SchedulerDecision:
        raise NotImplementedError


class _CachedIndexScheduler(Scheduler):
    """Memoizes index values per (ue, a, d); the index only depends on those."""

    def __init__(self, configs, rng=None, d_cap: int = DEFAULT_CAP):
        super().__init__(configs, rng)
        self.d_cap = d_cap
        self._cache: Dict[Tuple[int, int, int], float] = {}

    def _raw_index(self, ue: int, a: int, d: int) -> float:
        raise NotImplementedError

    def _index(self, ue: int, a: int, d: int) -> float:
        key = (ue, a, d)
        value = self._cache.get(key)
        if value is None:
            cfg = self.configs[ue]
            # no index exists when nothing is ever generated or delivered
            value = 0.0 if cfg.lam <= 0.0 or cfg.eps >= 1.0 else self._raw_index(ue, a, d)
            self._cache[key] = value
        return value


class WhittleScheduler(_CachedIndexScheduler):
    name = "whittle"

    def _raw_index(self, ue, a, d):
        cfg = self.configs[ue]
        return whittle_index_value(cfg.lam, cfg.eps, cfg.cost, a, d, self.d_cap)

    def decide(self, view):
        return whittle_policy(view, self.rng, index=self._index)


class OnDemandWhittleScheduler(_CachedIndexScheduler):
    name = "on_demand_whittle"

    def _raw_index(self, ue, a, d):
        cfg = self.configs[ue]
        return whittle_index_value(1.0, cfg.eps, cfg.cost, a, d, self.d_cap)

    def decide(self, view):
        return on_demand_whittle_policy(view, self.rng, index=self._index)


class AgeGreedyScheduler(Scheduler):
    name = "age_greedy"

    def decide(self, view):
        return age_greedy_policy(view, self.rng)


class RoundRobinScheduler(Scheduler):
    name = "round_robin"

    def __init__(self, configs, rng=None):
        super().__init__(configs, rng)
        self.cursor = 0

    def reset(self):
        self.cursor = 0

    def decide(self, view):
        decision, self.cursor = round_robin_policy(view, self.cursor)
        return decision


class OptimalScheduler(Scheduler):
    name = "optimal"

    def __init__(self, configs, rng=None, table: Any = None):
        super().__init__(configs, rng)
        if table is None:
            raise ValueError("the optimal scheduler needs a solved oracle table")
        self.table = table

    def decide(self, view):
        return optimal_policy(view, self.table)


# Policy registry for experiment configs
AVAILABLE_POLICIES: Dict[str, Dict[str, Any]] = {
    "whittle": {
        "class": WhittleScheduler,
        "description": "Closed-form Whittle index for stochastic generation and unreliable channels",
    },
    "age_greedy": {
        "class": AgeGreedyScheduler,
        "description": "Largest AoI among UEs with a deliverable packet",
    },
    "on_demand_whittle": {
        "class": OnDemandWhittleScheduler,
        "description": "Whittle index of the deterministic-generation model (λ = 1), d >= 1 only",
    },
    "optimal": {
        "class": OptimalScheduler,
        "description": "Tabulated optimum from joint value iteration (needs a solved table)",
    },
    "round_robin": {
        "class": RoundRobinScheduler,
        "description": "Cyclic service skipping UEs with nothing fresh to send",
    },
}


def create_scheduler(
    name: str,
    configs: Sequence[UeConfig],
    rng: Optional[np.random.Generator] = None,
    table: Any = None,
    d_cap: int = DEFAULT_CAP,
) -> Scheduler:
    """
    Factory function to build a scheduler by registry name.

    Args:
        name: Key of AVAILABLE_POLICIES
        configs: Per-UE configuration
        rng: Generator for random tie-breaking; None breaks ties by lowest id
        table: Solved oracle table, required by "optimal"
        d_cap: Cap for index threshold searches

    Returns:
        A fresh scheduler instance
    """
    if name not in AVAILABLE_POLICIES:
        raise UnknownPolicy(f"Policy {name} not supported. Available: {list(AVAILABLE_POLICIES.keys())}")
    cls = AVAILABLE_POLICIES[name]["class"]
    if cls is OptimalScheduler:
        return cls(configs, rng, table=table)
    if issubclass(cls, _CachedIndexScheduler):
        return cls(configs, rng, d_cap=d_cap)
    return cls(configs, rng)
