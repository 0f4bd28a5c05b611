"""
Tests for the closed-form Whittle index, D1 and threshold helpers.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cost import CostFunction, RejectedParameters
from whittle import (
    NoSolutionWithinCap,
    UeConfig,
    UeState,
    index_consistency_report,
    index_table,
    nesting_report,
    solve_d1,
    threshold_for_charge,
    threshold_profile,
    whittle_index,
    whittle_index_value,
)

LINEAR = CostFunction.linear()
STEP3 = CostFunction.step_violation(3)


def test_linear_index_example():
    value = whittle_index(0.5, 0.25, LINEAR, UeState(1, 2))
    assert value.index == pytest.approx(4.25)
    assert value.branch == "a=1"
    assert value.d1 == 2


def test_step_index_example():
    assert whittle_index_value(0.5, 0.25, STEP3, 1, 1) == pytest.approx(0.46875)


@pytest.mark.parametrize("a", [1, 2, 5, 40])
def test_index_is_zero_without_fresh_packet(a):
    for cost in (LINEAR, STEP3, CostFunction.polynomial(2.0, 1.0)):
        value = whittle_index(0.4, 0.3, cost, UeState(a, 0))
        assert value.index == 0.0
        assert value.branch == "d=0"


def test_constant_cost_index_vanishes():
    cost = CostFunction.constant(3.0)
    for a in range(1, 6):
        for d in range(1, 6):
            assert whittle_index_value(0.6, 0.2, cost, a, d) == pytest.approx(0.0, abs=1e-9)


def test_high_branch_formula_used_beyond_d1():
    value = whittle_index(0.5, 0.25, LINEAR, UeState(30, 1))
    assert value.branch in ("2<=a<=D1", "a>D1")
    if value.branch == "a>D1":
        assert value.d1 < 30
    else:
        assert value.d1 >= 30


def test_solve_d1_constant_zero_cost():
    assert solve_d1(0.5, 0.25, CostFunction.constant(0.0), 2, 3) == 1


def test_solve_d1_preconditions():
    with pytest.raises(ValueError):
        solve_d1(0.5, 0.25, LINEAR, 1, 5)
    with pytest.raises(ValueError):
        solve_d1(0.5, 0.25, LINEAR, 3, 0)


def test_solve_d1_cap():
    with pytest.raises(NoSolutionWithinCap):
        solve_d1(0.05, 0.9, CostFunction.polynomial(3.0, 1.0), 200, 200, d_cap=2)


def test_d1_is_smallest_solution():
    for a, d in [(2, 3), (4, 1), (6, 6)]:
        d1 = whittle_index(0.5, 0.25, LINEAR, UeState(a, d)).d1
        assert d1 >= 1
        assert solve_d1(0.5, 0.25, LINEAR, a, d) == d1


def test_rejected_parameters():
    with pytest.raises(RejectedParameters):
        whittle_index_value(0.0, 0.25, LINEAR, 1, 1)
    with pytest.raises(RejectedParameters):
        whittle_index_value(0.5, 1.0, LINEAR, 1, 1)


def test_index_scales_with_cost():
    for a, d in [(1, 1), (1, 4), (3, 2), (8, 5)]:
        base = whittle_index_value(0.3, 0.4, STEP3, a, d)
        scaled = whittle_index_value(0.3, 0.4, STEP3.scaled(7.0), a, d)
        assert scaled == pytest.approx(7.0 * base, rel=1e-9, abs=1e-12)


def test_index_increases_with_staleness_at_a_equals_one():
    values = [whittle_index_value(0.5, 0.25, LINEAR, 1, d) for d in range(0, 10)]
    assert all(lo < hi for lo, hi in zip(values, values[1:]))


def test_threshold_for_charge_examples():
    assert threshold_for_charge(0.5, 0.25, LINEAR, 4.25, 1) == 2
    for a in (1, 3, 7):
        assert threshold_for_charge(0.5, 0.25, LINEAR, 0.0, a) == 0


def test_threshold_for_large_charge_hits_cap():
    with pytest.raises(NoSolutionWithinCap):
        threshold_for_charge(0.5, 0.25, LINEAR, 1e9, 1, d_cap=50)


def test_threshold_profile():
    profile = threshold_profile(0.5, 0.25, LINEAR, 0.0, a_max=5)
    assert profile.thresholds == [0, 0, 0, 0, 0]
    assert profile.is_monotone
    assert profile.threshold(3) == 0


def test_index_table_layout():
    table = index_table(0.5, 0.25, LINEAR, a_max=4, d_max=4)
    assert table.shape == (4, 5)
    assert np.all(table[:, 0] == 0.0)
    assert table[0, 2] == pytest.approx(4.25)


def test_consistency_report_trivial_grid():
    report = index_consistency_report(0.5, 0.25, LINEAR, [0.0], range(1, 6), range(0, 6))
    assert report.passed
    assert report.idle_counts == [0]


def test_consistency_report_nests():
    report = index_consistency_report(0.5, 0.25, LINEAR, [0, 1, 2, 4, 8], range(1, 13), range(0, 13))
    assert report.passed
    assert report.idle_counts == sorted(report.idle_counts)


def test_consistency_report_needs_ascending_grid():
    with pytest.raises(ValueError):
        index_consistency_report(0.5, 0.25, LINEAR, [2.0, 1.0], range(1, 3), range(0, 3))


def test_nesting_report_flags_shrinking_idle_set():
    wide = np.array([[True, True], [False, True]])
    narrow = np.array([[True, False], [False, True]])
    report = nesting_report([1.0, 2.0], [1, 2], [3, 4], [wide, narrow], "handmade")
    assert not report.passed
    assert report.idle_counts == [3, 2]
    assert len(report.violations) == 1
    violation = report.violations[0]
    assert (violation.a, violation.d) == (1, 4)
    assert (violation.lower_charge, violation.higher_charge) == (1.0, 2.0)


def test_low_branch_solves_threshold_equation_for_charge():
    value = whittle_index(0.5, 0.25, LINEAR, UeState(4, 8))
    assert value.branch == "2<=a<=D1"
    assert value.d1 == 5
    assert value.index == pytest.approx(14.75)


def test_step_index_plateaus_past_threshold():
    # v(h) = 1 for h >= H makes the a = 1 index flat at (1-ε)(H-1) from d = H-1 on
    plateau = 0.75 * 2
    for d in range(2, 8):
        assert whittle_index_value(0.5, 0.25, STEP3, 1, d) == pytest.approx(plateau)
    assert whittle_index_value(0.5, 0.25, STEP3, 1, 1) < plateau
    m = whittle_index_value(0.5, 0.25, STEP3, 1, 6)
    assert threshold_for_charge(0.5, 0.25, STEP3, m, 1) == 2


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.step_violation(10), CostFunction.polynomial(2.0, 1.0)])
@pytest.mark.parametrize("lam, eps", [(0.3, 0.5), (0.5, 0.25), (0.7, 0.0), (1.0, 0.3)])
def test_index_non_negative(cost, lam, eps):
    table = index_table(lam, eps, cost, a_max=10, d_max=10)
    assert table.min() >= -1e-9


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.step_violation(10)])
@pytest.mark.parametrize("lam, eps", [(0.3, 0.5), (0.5, 0.25), (0.8, 0.1)])
def test_high_branch_index_non_decreasing_in_staleness(cost, lam, eps):
    for a in range(2, 16):
        values = [whittle_index(lam, eps, cost, UeState(a, d)) for d in range(0, 16)]
        for lo, hi in zip(values, values[1:]):
            if lo.branch == "a>D1" and hi.branch == "a>D1":
                assert hi.index >= lo.index - 1e-9


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.step_violation(5)])
def test_index_continuous_across_degenerate_line(cost):
    states = [(1, d) for d in range(1, 7)] + [(a, d) for a in (2, 4, 9) for d in (1, 3, 6)]
    on_line = np.array([whittle_index_value(0.6, 0.4, cost, a, d) for a, d in states])
    for shift in (-1e-8, 1e-8):
        nearby = np.array([whittle_index_value(0.6, 0.4 + shift, cost, a, d) for a, d in states])
        assert np.allclose(nearby, on_line, rtol=1e-3, atol=1e-9)


def test_state_validation():
    with pytest.raises(ValueError):
        UeState(0, 1)
    with pytest.raises(ValueError):
        UeState(1, -1)
    assert UeState(3, 2).h == 5


def test_ue_config_allows_simulator_edge_values():
    cfg = UeConfig(lam=1.0, eps=1.0, cost=LINEAR)
    assert cfg.eps == 1.0
