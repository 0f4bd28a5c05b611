from .schedulers import (
    AVAILABLE_POLICIES,
    IDLE,
    AgeGreedyScheduler,
    FleetView,
    OnDemandWhittleScheduler,
    OptimalScheduler,
    OutOfTable,
    RoundRobinScheduler,
    Scheduler,
    SchedulerDecision,
    UnknownPolicy,
    WhittleScheduler,
    age_greedy_policy,
    create_scheduler,
    on_demand_whittle_policy,
    optimal_policy,
    round_robin_policy,
    whittle_policy,
)

__all__ = [
    "AVAILABLE_POLICIES",
    "IDLE",
    "AgeGreedyScheduler",
    "FleetView",
    "OnDemandWhittleScheduler",
    "OptimalScheduler",
    "OutOfTable",
    "RoundRobinScheduler",
    "Scheduler",
    "SchedulerDecision",
    "UnknownPolicy",
    "WhittleScheduler",
    "age_greedy_policy",
    "create_scheduler",
    "on_demand_whittle_policy",
    "optimal_policy",
    "round_robin_policy",
    "whittle_policy",
]
