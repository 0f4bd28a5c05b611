"""
Built-in experiment presets.

The two-user, homogeneous and heterogeneous comparisons come with their cost
functions and fleet sizes fixed; the (λ, ε) values are reconstructions and can
be overridden from a config file.
"""

from typing import Any, Dict, List

LAMBDA_GRID: List[float] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
EPSILON_GRID: List[float] = [0.2, 0.5]
BENCHMARK_POLICIES: List[str] = ["whittle", "age_greedy", "on_demand_whittle"]


def _step(threshold: int) -> Dict[str, Any]:
    return {"kind": "step_violation", "params": {"threshold": threshold}}


def _fleet(costs: List[Dict[str, Any]], lam: float = 0.5, eps: float = 0.2) -> List[Dict[str, Any]]:
    return [{"lam": lam, "eps": eps, "cost": cost} for cost in costs]


PRESETS: Dict[str, Dict[str, Any]] = {
    "preset_fig2": {
        "description": "Two UEs, v(h) = 1 if h >= 6: Whittle index policy against the joint optimum",
        "defaults": {
            "sim": {
                "ues": _fleet([_step(6), _step(6)], lam=0.6, eps=0.2),
                "horizon": 1_000_000,
                "replications": 20,
                "cost_timing": "post_transmission",
            },
            "sweep": {"lambdas": [0.6], "epsilons": [0.2], "policies": ["whittle"]},
            "joint": {"a_max": 24, "d_max": 24},
        },
    },
    "preset_fig3": {
        "description": "Six homogeneous UEs, v(h) = 1 if h >= 10, swept over λ",
        "defaults": {
            "sim": {"ues": _fleet([_step(10)] * 6), "horizon": 1_000_000, "replications": 20},
            "sweep": {"lambdas": LAMBDA_GRID, "epsilons": EPSILON_GRID, "policies": BENCHMARK_POLICIES},
        },
    },
    "preset_fig4": {
        "description": "Six UEs, half with v(h) = 1 if h >= 10 and half with h >= 15, swept over λ",
        "defaults": {
            "sim": {
                "ues": _fleet([_step(10)] * 3 + [_step(15)] * 3),
                "horizon": 1_000_000,
                "replications": 20,
            },
            "sweep": {"lambdas": LAMBDA_GRID, "epsilons": EPSILON_GRID, "policies": BENCHMARK_POLICIES},
        },
    },
}


def merge(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values in ``overrides`` win and lists are replaced whole."""
    merged = dict(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def preset_defaults(kind: str) -> Dict[str, Any]:
    preset = PRESETS.get(kind)
    return {} if preset is None else preset["defaults"]
