"""
Tests for the schedulers.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cost import CostFunction
from oracle import DecoupledMdp, JointMdp, joint_rvi_solve, rvi_solve
from policies import (
    AVAILABLE_POLICIES,
    IDLE,
    FleetView,
    OutOfTable,
    SchedulerDecision,
    UnknownPolicy,
    age_greedy_policy,
    create_scheduler,
    on_demand_whittle_policy,
    optimal_policy,
    round_robin_policy,
    whittle_policy,
)
from whittle import UeConfig, UeState

LINEAR = CostFunction.linear()
STEP3 = CostFunction.step_violation(3)


def _view(configs, states):
    return FleetView.of(configs, [UeState(a, d) for a, d in states])


def test_whittle_picks_largest_index():
    configs = [UeConfig(lam=0.5, eps=0.25, cost=LINEAR), UeConfig(lam=0.5, eps=0.25, cost=STEP3)]
    # indices 4.25 and 0.46875
    assert whittle_policy(_view(configs, [(1, 2), (1, 1)])) == SchedulerDecision.schedule(0)
    assert whittle_policy(_view(configs[::-1], [(1, 1), (1, 2)])) == SchedulerDecision.schedule(1)


def test_whittle_idles_without_fresh_packets():
    configs = [UeConfig(lam=0.5, eps=0.25, cost=LINEAR)] * 3
    assert whittle_policy(_view(configs, [(1, 0), (4, 0), (9, 0)])).is_idle


def test_whittle_ties_go_to_lowest_id():
    configs = [UeConfig(lam=0.5, eps=0.25, cost=LINEAR)] * 2
    assert whittle_policy(_view(configs, [(2, 3), (2, 3)])).ue == 0


def test_random_tie_break_stays_among_tied():
    configs = [UeConfig(lam=0.5, eps=0.25, cost=LINEAR)] * 3
    rng = np.random.default_rng(3)
    picks = {whittle_policy(_view(configs, [(2, 3), (2, 3), (1, 0)]), rng).ue for _ in range(50)}
    assert picks == {0, 1}


def test_whittle_never_prefers_empty_buffer():
    configs = [UeConfig(lam=0.3, eps=0.4, cost=LINEAR)] * 2
    assert whittle_policy(_view(configs, [(50, 0), (1, 1)])).ue == 1


def test_age_greedy_examples():
    configs = [UeConfig(lam=0.5, eps=0.2, cost=LINEAR)] * 2
    # h = 5, d = 2 against h = 7, d = 0
    assert age_greedy_policy(_view(configs, [(3, 2), (7, 0)])).ue == 0
    assert age_greedy_policy(_view(configs, [(3, 2), (4, 3)])).ue == 1
    assert age_greedy_policy(_view(configs, [(3, 0), (4, 0)])).is_idle


def test_on_demand_examples():
    configs = [UeConfig(lam=0.3, eps=0.2, cost=STEP3)]
    assert on_demand_whittle_policy(_view(configs, [(2, 4)])).ue == 0
    assert on_demand_whittle_policy(_view(configs, [(2, 0)])).is_idle


def test_on_demand_matches_whittle_at_full_generation():
    configs = [UeConfig(lam=1.0, eps=0.3, cost=LINEAR), UeConfig(lam=1.0, eps=0.1, cost=CostFunction.polynomial(2.0, 0.5))]
    rng = np.random.default_rng(5)
    for _ in range(30):
        states = [(int(rng.integers(1, 6)), int(rng.integers(0, 6))) for _ in configs]
        view = _view(configs, states)
        assert on_demand_whittle_policy(view) == whittle_policy(view)


def test_round_robin_cycles_and_skips_empty():
    configs = [UeConfig(lam=0.5, eps=0.2, cost=LINEAR)] * 3
    view = _view(configs, [(1, 1), (1, 0), (1, 2)])
    decision, cursor = round_robin_policy(view, 0)
    assert decision.ue == 0
    decision, cursor = round_robin_policy(view, cursor)
    assert decision.ue == 2
    decision, cursor = round_robin_policy(view, cursor)
    assert decision.ue == 0
    assert round_robin_policy(_view(configs, [(1, 0)] * 3), 1)[0].is_idle
    assert round_robin_policy(_view(configs[:1], [(2, 1)]), 0)[0].ue == 0


def test_optimal_policy_with_decoupled_table():
    cfg = UeConfig(lam=0.5, eps=0.25, cost=LINEAR)
    table = rvi_solve(DecoupledMdp(lam=0.5, eps=0.25, cost=LINEAR, charge=0.0, a_max=10, d_max=10))
    assert optimal_policy(_view([cfg], [(3, 2)]), table).ue == 0
    assert optimal_policy(_view([cfg], [(3, 0)]), table).is_idle
    with pytest.raises(OutOfTable):
        optimal_policy(_view([cfg], [(11, 0)]), table)


def test_optimal_policy_zero_costs_idle():
    zero = UeConfig(lam=0.5, eps=0.3, cost=CostFunction.constant(0.0))
    table = joint_rvi_solve(JointMdp(ues=(zero, zero), a_max=5, d_max=5))
    for states in [[(1, 3), (2, 4)], [(5, 5), (1, 0)]]:
        assert optimal_policy(_view([zero, zero], states), table) == IDLE


def test_scale_covariance_keeps_decision():
    rng = np.random.default_rng(9)
    base = [UeConfig(lam=0.4, eps=0.3, cost=STEP3), UeConfig(lam=0.7, eps=0.1, cost=LINEAR)]
    scaled = [cfg.model_copy(update={"cost": cfg.cost.scaled(4.0)}) for cfg in base]
    for _ in range(30):
        states = [(int(rng.integers(1, 8)), int(rng.integers(0, 8))) for _ in base]
        assert whittle_policy(_view(base, states)) == whittle_policy(_view(scaled, states))


def test_at_most_one_ue_per_decision():
    configs = [UeConfig(lam=0.5, eps=0.2, cost=LINEAR)] * 4
    view = _view(configs, [(1, 2), (3, 1), (2, 2), (1, 0)])
    for name in ("whittle", "age_greedy", "on_demand_whittle", "round_robin"):
        decision = create_scheduler(name, configs).decide(view)
        assert isinstance(decision, SchedulerDecision)
        assert decision.ue is None or 0 <= decision.ue < 4


def test_registry_and_factory():
    assert set(AVAILABLE_POLICIES) == {"whittle", "age_greedy", "on_demand_whittle", "optimal", "round_robin"}
    with pytest.raises(UnknownPolicy):
        create_scheduler("max_weight", [UeConfig(lam=0.5, eps=0.2, cost=LINEAR)])
    with pytest.raises(ValueError):
        create_scheduler("optimal", [UeConfig(lam=0.5, eps=0.2, cost=LINEAR)])


def test_cached_scheduler_handles_undeliverable_ues():
    configs = [UeConfig(lam=0.5, eps=1.0, cost=LINEAR), UeConfig(lam=0.5, eps=0.2, cost=LINEAR)]
    scheduler = create_scheduler("whittle", configs)
    assert scheduler.decide(_view(configs, [(2, 5), (1, 1)])).ue == 1


def test_empty_view_rejected():
    with pytest.raises(ValueError):
        whittle_policy(FleetView((), [], []))
