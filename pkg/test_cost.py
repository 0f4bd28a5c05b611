"""
Tests for the cost-of-AoI functions.
"""

import os
import sys

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cost import (
    CostFunction,
    CostKind,
    RejectedParameters,
    evaluate,
    evaluate_many,
    growth_bound,
    partial_sum,
    validate,
)


def test_step_violation_threshold():
    v = CostFunction.step_violation(10)
    assert evaluate(v, 9) == 0.0
    assert evaluate(v, 10) == 1.0


def test_linear_and_zero_constant():
    assert evaluate(CostFunction.linear(), 7) == 7.0
    zero = CostFunction.constant(0.0)
    assert all(evaluate(zero, h) == 0.0 for h in range(0, 50))


def test_cost_at_zero_age_is_zero():
    for v in [CostFunction.linear(), CostFunction.constant(3.0), CostFunction.polynomial(2, 0.5)]:
        assert evaluate(v, 0) == 0.0


def test_negative_age_rejected():
    with pytest.raises(ValueError):
        evaluate(CostFunction.linear(), -1)


def test_evaluate_many_matches_scalar():
    h = np.arange(0, 40)
    for v in [
        CostFunction.linear(),
        CostFunction.step_violation(6),
        CostFunction.polynomial(1.5, 2.0),
        CostFunction.constant(0.7),
        CostFunction.step_violation(15).scaled(2.5),
    ]:
        expected = [evaluate(v, int(x)) for x in h]
        assert np.allclose(evaluate_many(v, h), expected)


def test_config_form_with_params():
    v = CostFunction.model_validate({"kind": "step_violation", "params": {"threshold": 15}})
    assert v.kind is CostKind.STEP_VIOLATION
    assert v.threshold == 15
    assert CostFunction.model_validate(v.to_config()) == v


def test_missing_kind_parameters_rejected():
    with pytest.raises(ValidationError):
        CostFunction(kind=CostKind.STEP_VIOLATION)
    with pytest.raises(ValidationError):
        CostFunction.model_validate({"kind": "polynomial", "params": {"coefficient": 1.0}})
    with pytest.raises(ValidationError):
        CostFunction.model_validate({"kind": "cubic"})


def test_scaled_multiplies_values():
    v = CostFunction.step_violation(4)
    w = v.scaled(3.0)
    assert evaluate(w, 5) == 3.0
    assert evaluate(w, 3) == 0.0
    assert w.label.startswith("3*")


def test_costs_are_hashable_cache_keys():
    assert hash(CostFunction.linear()) == hash(CostFunction.linear())
    assert len({CostFunction.linear(), CostFunction.linear(), CostFunction.step_violation(3)}) == 2


@pytest.mark.parametrize(
    "lam, eps",
    [(0.5, 0.25), (1.0, 0.0), (0.01, 0.99)],
)
def test_validate_accepts(lam, eps):
    validate(CostFunction.linear(), lam, eps)


@pytest.mark.parametrize("lam, eps", [(0.0, 0.5), (0.5, 1.0), (1.5, 0.2), (0.5, -0.1)])
def test_validate_rejects(lam, eps):
    with pytest.raises(RejectedParameters):
        validate(CostFunction.linear(), lam, eps)


def test_growth_bound_holds():
    for v in [
        CostFunction.linear(),
        CostFunction.step_violation(3),
        CostFunction.polynomial(2.0, 1.5),
        CostFunction.constant(2.0),
    ]:
        assert growth_bound(v).holds_for(v, h_max=2000)


@pytest.mark.parametrize(
    "v",
    [
        CostFunction.linear(),
        CostFunction.step_violation(5),
        CostFunction.constant(1.5),
        CostFunction.polynomial(2.0, 0.5),
    ],
)
def test_partial_sum_matches_direct_sum(v):
    for n in [0, 1, 4, 5, 6, 30]:
        assert partial_sum(v, n) == pytest.approx(sum(evaluate(v, h) for h in range(1, n + 1)))
