"""
Cost-of-AoI functions.
Defines the non-decreasing per-slot cost v(h) charged for an age of
information h, the built-in families, and their convergence checks.
"""

import logging
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)


class RejectedParameters(ValueError):
    """Raised when (λ, ε) make the cost series Σ ε^k v(k) or Σ (1-λ)^k v(k) diverge."""


class CostKind(str, Enum):
    """Built-in cost families."""

    LINEAR = "linear"
    STEP_VIOLATION = "step_violation"
    POLYNOMIAL = "polynomial"
    CONSTANT = "constant"


class GrowthBound(BaseModel):
    """Envelope v(h) <= constant * (1 + h) ** degree, used to certify series tails."""

    model_config = ConfigDict(frozen=True)

    degree: float = Field(ge=0)
    constant: float = Field(ge=0)

    def bound(self, h: int) -> float:
        return self.constant * (1.0 + h) ** self.degree

    def holds_for(self, cost: "CostFunction", h_max: int = 10_000) -> bool:
        """Check the envelope pointwise for 0 <= h <= h_max."""
        h = np.arange(h_max + 1)
        values = evaluate_many(cost, h)
        envelope = self.constant * (1.0 + h) ** self.degree
        return bool(np.all(values <= envelope * (1 + 1e-12)))


class CostFunction(BaseModel):
    """
    Per-slot cost v(h) of AoI h.

    Every kind is multiplied by ``scale`` (default 1):
      - linear:          v(h) = h
      - step_violation:  v(h) = 1 if h >= threshold else 0
      - polynomial:      v(h) = coefficient * h ** degree
      - constant:        v(h) = coefficient
    v(0) is 0 for every kind.

    In config files a cost is written as ``{kind: ..., params: {...}}``.
    """

    model_config = ConfigDict(frozen=True)

    kind: CostKind
    threshold: Optional[int] = Field(default=None, ge=1)
    degree: Optional[float] = Field(default=None, ge=1)
    coefficient: Optional[float] = Field(default=None, ge=0)
    scale: float = Field(default=1.0, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _flatten_params(cls, data: Any) -> Any:
        if isinstance(data, dict) and "params" in data:
            data = dict(data)
            params = data.pop("params") or {}
            if not isinstance(params, dict):
                raise ValueError("cost params must be a mapping")
            data.update(params)
        return data

    @model_validator(mode="after")
    def _check_kind_params(self) -> "CostFunction":
        if self.kind is CostKind.STEP_VIOLATION and self.threshold is None:
            raise ValueError("step_violation cost needs a positive integer threshold")
        if self.kind is CostKind.POLYNOMIAL:
            if self.degree is None:
                raise ValueError("polynomial cost needs a degree >= 1")
            if not self.coefficient:
                raise ValueError("polynomial cost needs a coefficient > 0")
        return self

    # ------------------------
    # Constructors
    # ------------------------

    @classmethod
    def linear(cls) -> "CostFunction":
        return cls(kind=CostKind.LINEAR)

    @classmethod
    def step_violation(cls, threshold: int) -> "CostFunction":
        return cls(kind=CostKind.STEP_VIOLATION, threshold=threshold)

    @classmethod
    def polynomial(cls, degree: float, coefficient: float = 1.0) -> "CostFunction":
        return cls(kind=CostKind.POLYNOMIAL, degree=degree, coefficient=coefficient)

    @classmethod
    def constant(cls, value: float = 0.0) -> "CostFunction":
        return cls(kind=CostKind.CONSTANT, coefficient=value)

    def scaled(self, factor: float) -> "CostFunction":
        """Return the same family with every value multiplied by ``factor`` > 0."""
        if factor <= 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return self.model_copy(update={"scale": self.scale * factor})

    @property
    def label(self) -> str:
        """Short human-readable name used in result files."""
        if self.kind is CostKind.LINEAR:
            base = "linear"
        elif self.kind is CostKind.STEP_VIOLATION:
            base = f"step(H={self.threshold})"
        elif self.kind is CostKind.POLYNOMIAL:
            base = f"poly(p={self.degree:g},c={self.coefficient:g})"
        else:
            base = f"constant({self.coefficient or 0.0:g})"
        return base if self.scale == 1.0 else f"{self.scale:g}*{base}"

    def to_config(self) -> Dict[str, Any]:
        """Serialize as the ``{kind, params}`` object used in config files."""
        params: Dict[str, Any] = {}
        if self.threshold is not None:
            params["threshold"] = self.threshold
        if self.degree is not None:
            params["degree"] = self.degree
        if self.coefficient is not None:
            params["coefficient"] = self.coefficient
        if self.scale != 1.0:
            params["scale"] = self.scale
        return {"kind": self.kind.value, "params": params}


def evaluate(v: CostFunction, h: int) -> float:
    """
    Evaluate the cost v(h).

    Args:
        v: Cost function
        h: Age of information, h >= 0

    Returns:
        The non-negative cost; v(0) is 0 for every kind
    """
    if h < 0:
        raise ValueError(f"AoI must be non-negative, got {h}")
    if h == 0:
        return 0.0
    if v.kind is CostKind.LINEAR:
        return v.scale * float(h)
    if v.kind is CostKind.STEP_VIOLATION:
        return v.scale if h >= v.threshold else 0.0
    if v.kind is CostKind.POLYNOMIAL:
        return v.scale * v.coefficient * float(h) ** v.degree
    return v.scale * (v.coefficient or 0.0)


def evaluate_many(v: CostFunction, h: np.ndarray) -> np.ndarray:
    """Vectorized ``evaluate`` over an integer array of AoI values."""
    h = np.asarray(h)
    if np.any(h < 0):
        raise ValueError("AoI must be non-negative")
    hf = h.astype(float)
    if v.kind is CostKind.LINEAR:
        out = v.scale * hf
    elif v.kind is CostKind.STEP_VIOLATION:
        out = np.where(h >= v.threshold, v.scale, 0.0)
    elif v.kind is CostKind.POLYNOMIAL:
        out = v.scale * v.coefficient * hf ** v.degree
    else:
        out = np.full(hf.shape, v.scale * (v.coefficient or 0.0))
    return np.where(h == 0, 0.0, out)


def growth_bound(v: CostFunction) -> GrowthBound:
    """Return a polynomial envelope for ``v``."""
    if v.kind is CostKind.LINEAR:
        return GrowthBound(degree=1.0, constant=v.scale)
    if v.kind is CostKind.STEP_VIOLATION:
        return GrowthBound(degree=0.0, constant=v.scale)
    if v.kind is CostKind.POLYNOMIAL:
        return GrowthBound(degree=v.degree, constant=v.scale * v.coefficient)
    return GrowthBound(degree=0.0, constant=v.scale * (v.coefficient or 0.0))


def validate(v: CostFunction, lam: float, eps: float) -> None:
    """
    Check that the average cost is finite for generation probability ``lam``
    and transmission error probability ``eps``.

    Raises:
        RejectedParameters: if a probability is out of range, lam == 0 or eps == 1
    """
    if not 0.0 <= lam <= 1.0:
        raise RejectedParameters(f"packet generation probability must lie in [0, 1], got {lam}")
    if not 0.0 <= eps <= 1.0:
        raise RejectedParameters(f"transmission error probability must lie in [0, 1], got {eps}")
    if lam <= 0.0:
        raise RejectedParameters(
            f"sum of (1-λ)^k v(k) diverges for λ={lam}: no packet is ever generated ({v.label})"
        )
    if eps >= 1.0:
        raise RejectedParameters(
            f"sum of ε^k v(k) diverges for ε={eps}: no transmission ever succeeds ({v.label})"
        )


@lru_cache(maxsize=65536)
def partial_sum(v: CostFunction, n: int) -> float:
    """Return Σ_{h=1}^{n} v(h); zero for n <= 0."""
    if n <= 0:
        return 0.0
    if v.kind is CostKind.LINEAR:
        return v.scale * n * (n + 1) / 2.0
    if v.kind is CostKind.STEP_VIOLATION:
        return v.scale * max(0, n - v.threshold + 1)
    if v.kind is CostKind.CONSTANT:
        return v.scale * (v.coefficient or 0.0) * n
    return float(np.sum(evaluate_many(v, np.arange(1, n + 1))))


__all__ = [
    "CostFunction",
    "CostKind",
    "GrowthBound",
    "RejectedParameters",
    "evaluate",
    "evaluate_many",
    "growth_bound",
    "partial_sum",
    "validate",
]
