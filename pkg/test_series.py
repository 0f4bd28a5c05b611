"""
Tests for the θ, ψ and ω tail sums.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cost import CostFunction, RejectedParameters, evaluate
from series import (
    SeriesContext,
    brute_force_sum,
    create_series_context,
    omega,
    omega_quotient,
    omega_series,
    psi,
    series_values,
    theta,
)

LINEAR = CostFunction.linear()
STEP3 = CostFunction.step_violation(3)


def test_theta_examples():
    assert theta(create_series_context(0.5, 0.25, LINEAR), 1) == pytest.approx(16 / 9)
    ctx = create_series_context(0.5, 0.25, STEP3)
    assert theta(ctx, 3) == pytest.approx(4 / 3)
    assert theta(ctx, 1) == pytest.approx(0.25 ** 2 / 0.75)


def test_psi_examples():
    assert psi(create_series_context(0.5, 0.25, LINEAR), 1) == pytest.approx(4.0)
    assert psi(create_series_context(0.5, 0.25, STEP3), 1) == pytest.approx(0.5)
    assert psi(create_series_context(1.0, 0.25, LINEAR), 5) == pytest.approx(5.0)


def test_omega_examples():
    ctx = create_series_context(0.5, 0.25, LINEAR)
    assert omega(ctx, 1) == pytest.approx(80 / 9)
    assert omega(ctx, 2) == pytest.approx(11.555556, abs=1e-6)


def test_zero_cost_gives_zero_sums():
    ctx = create_series_context(0.4, 0.3, CostFunction.constant(0.0))
    for h in [1, 5, 40]:
        assert series_values(ctx, h).model_dump() == {"h": h, "theta": 0.0, "psi": 0.0, "omega": 0.0}


def test_constant_omega():
    c = 2.5
    ctx = create_series_context(0.3, 0.4, CostFunction.constant(c))
    for h in [1, 7]:
        assert omega(ctx, h) == pytest.approx(c / (0.3 * 0.6))
        assert omega_quotient(ctx, h) == pytest.approx(c / (0.3 * 0.6))


def test_degenerate_step_omega():
    ctx = create_series_context(0.5, 0.5, STEP3)
    assert ctx.degenerate
    for h in [3, 4, 10]:
        assert omega(ctx, h) == pytest.approx(4.0)
        assert omega_series(ctx, h) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        omega_quotient(ctx, 3)


def test_omega_series_matches_quotient_off_degenerate_line():
    for cost in [LINEAR, STEP3, CostFunction.polynomial(2.0, 1.0)]:
        ctx = create_series_context(0.5, 0.25, cost)
        for h in [1, 2, 6]:
            assert omega_series(ctx, h) == pytest.approx(omega_quotient(ctx, h), rel=1e-9)


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.polynomial(2.0, 1.0)])
def test_omega_continuous_across_degenerate_line(cost):
    values = []
    for shift in (-1e-8, 0.0, 1e-8):
        ctx = create_series_context(0.6, 0.4 + shift, cost)
        values.append([omega(ctx, h) for h in (1, 3, 8)])
    values = np.array(values)
    assert np.allclose(values, values[1], rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.step_violation(10), CostFunction.constant(1.5)])
def test_closed_forms_match_certified_truncation(cost):
    rng = np.random.default_rng(7)
    for _ in range(40):
        lam = float(rng.uniform(0.05, 1.0))
        eps = float(rng.uniform(0.0, 0.95))
        h = int(rng.integers(1, 30))
        ctx = create_series_context(lam, eps, cost, tolerance=1e-12)
        assert theta(ctx, h) == pytest.approx(brute_force_sum(ctx, eps, h), abs=2e-9)
        assert psi(ctx, h) == pytest.approx(brute_force_sum(ctx, 1.0 - lam, h), abs=2e-9)


def test_omega_closed_form_matches_series_on_random_points():
    rng = np.random.default_rng(11)
    for _ in range(60):
        lam = float(rng.uniform(0.05, 1.0))
        eps = float(rng.uniform(0.0, 0.9))
        h = int(rng.integers(1, 20))
        for cost in (LINEAR, CostFunction.step_violation(8)):
            ctx = create_series_context(lam, eps, cost)
            assert omega(ctx, h) == pytest.approx(omega_series(ctx, h), rel=1e-8, abs=2e-9)


def test_divergent_parameters_rejected():
    with pytest.raises(RejectedParameters):
        create_series_context(0.0, 0.5, LINEAR)
    with pytest.raises(RejectedParameters):
        create_series_context(0.5, 1.0, LINEAR)


def test_series_need_positive_age():
    ctx = create_series_context(0.5, 0.25, LINEAR)
    with pytest.raises(ValueError):
        theta(ctx, 0)


def test_cached_values_are_reproducible():
    a = SeriesContext(lam=0.35, eps=0.45, cost=CostFunction.polynomial(1.5, 1.0))
    b = SeriesContext(lam=0.35, eps=0.45, cost=CostFunction.polynomial(1.5, 1.0))
    assert omega(a, 4) == omega(b, 4)
    assert theta(a, 4) == theta(b, 4)


@pytest.mark.parametrize("cost", [LINEAR, STEP3, CostFunction.step_violation(10), CostFunction.polynomial(2.0, 1.0)])
@pytest.mark.parametrize("lam, eps", [(0.3, 0.5), (0.5, 0.25), (0.6, 0.4), (0.9, 0.05), (1.0, 0.2)])
def test_series_non_decreasing_and_dominate_next_cost(cost, lam, eps):
    ctx = create_series_context(lam, eps, cost)
    rows = np.array([[theta(ctx, h), psi(ctx, h), omega(ctx, h)] for h in range(1, 31)])
    assert np.all(np.diff(rows, axis=0) >= -1e-9)
    for h in range(1, 30):
        assert lam * (1.0 - eps) * omega(ctx, h) >= evaluate(cost, h + 1) - 1e-9
