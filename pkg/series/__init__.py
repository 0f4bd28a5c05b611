"""
Geometric-weighted tail sums of a cost function.

    θ(h) = Σ_{k>=0} ε^k v(h+k)
    ψ(h) = Σ_{k>=0} (1-λ)^k v(h+k)
    ω(h) = (ψ(h) - θ(h)) / (1-λ-ε),   or Σ_{k>=1} ε^{k-1} θ(h+k) when ε = 1-λ

Closed forms are used for the linear, step-violation and constant families.
Everything else is summed until a tail bound derived from the cost's
GrowthBound drops below the context tolerance.
"""

import logging
from functools import lru_cache
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field

from cost import CostFunction, CostKind, evaluate, growth_bound, validate

logger = logging.getLogger(__name__)

# |1-λ-ε| below this marks the degenerate branch ε = 1-λ
DEGENERACY_TOLERANCE = 1e-9
DEFAULT_TOLERANCE = 1e-12
# below this gap the quotient (ψ-θ)/(1-λ-ε) loses too many digits; ω is summed instead
QUOTIENT_MIN_GAP = 1e-3
MAX_TERMS = 10_000_000


class NonConvergent(RuntimeError):
    """Raised when a series cannot be certified below the requested tolerance."""


class SeriesContext(BaseModel):
    """Parameters shared by θ, ψ and ω for one UE."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(gt=0.0, le=1.0)
    eps: float = Field(ge=0.0, lt=1.0)
    cost: CostFunction
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0.0)

    @property
    def gap(self) -> float:
        """1 - λ - ε."""
        return 1.0 - self.lam - self.eps

    @property
    def degenerate(self) -> bool:
        return abs(self.gap) < DEGENERACY_TOLERANCE


class SeriesValues(BaseModel):
    """θ, ψ and ω evaluated at one AoI value."""

    model_config = ConfigDict(frozen=True)

    h: int
    theta: float
    psi: float
    omega: float


def create_series_context(
    lam: float, eps: float, cost: CostFunction, tolerance: float = DEFAULT_TOLERANCE
) -> SeriesContext:
    """
    Build a validated series context.

    Raises:
        RejectedParameters: if λ = 0 or ε = 1
    """
    validate(cost, lam, eps)
    return SeriesContext(lam=lam, eps=eps, cost=cost, tolerance=tolerance)


# ------------------------
# Closed forms
# ------------------------

def _geometric_closed_form(v: CostFunction, ratio: float, h: int) -> Optional[float]:
    """Σ_{k>=0} ratio^k v(h+k) for the families that have one, else None."""
    norm = 1.0 - ratio
    if v.kind is CostKind.LINEAR:
        return v.scale * (h / norm + ratio / norm ** 2)
    if v.kind is CostKind.POLYNOMIAL and v.degree == 1:
        return v.scale * v.coefficient * (h / norm + ratio / norm ** 2)
    if v.kind is CostKind.STEP_VIOLATION:
        return v.scale * ratio ** max(v.threshold - h, 0) / norm
    if v.kind is CostKind.CONSTANT:
        return v.scale * (v.coefficient or 0.0) / norm
    return None


def _omega_closed_form(ctx: SeriesContext, h: int) -> Optional[float]:
    """
    ω for the families with a closed form, arranged so that no term divides
    by 1-λ-ε. Valid on both sides of the degenerate line and on it.
    """
    v = ctx.cost
    x, y = ctx.lam, 1.0 - ctx.eps
    if v.kind in (CostKind.LINEAR, CostKind.POLYNOMIAL):
        if v.kind is CostKind.POLYNOMIAL and v.degree != 1:
            return None
        slope = v.scale * (v.coefficient if v.kind is CostKind.POLYNOMIAL else 1.0)
        return slope * (h / (x * y) + (x + y) / (x * y) ** 2 - 1.0 / (x * y))
    if v.kind is CostKind.CONSTANT:
        return v.scale * (v.coefficient or 0.0) / (x * y)
    if v.kind is CostKind.STEP_VIOLATION:
        n = v.threshold - h
        if n <= 0:
            return v.scale / (x * y)
        r_arrival, r_error = 1.0 - ctx.lam, ctx.eps
        mixed = sum(r_arrival ** i * r_error ** (n - 1 - i) for i in range(n))
        return v.scale * (mixed / x + r_error ** n / (x * y))
    return None


# ------------------------
# Certified truncation
# ------------------------

def _truncated_sum(
    term: Callable[[int], float],
    ratio: float,
    degree: float,
    constant: float,
    offset: int,
    tolerance: float,
) -> float:
    """
    Sum term(k) for k >= 0, assuming term(k) <= constant * (1+offset+k)^degree * ratio^k.

    Stops once the remaining tail, bounded by a geometric series with the
    local growth factor, is at most ``tolerance``.
    """
    if ratio == 0.0 or constant == 0.0:
        return term(0)
    total = 0.0
    k = 0
    while True:
        total += term(k)
        k += 1
        base = 1.0 + offset + k
        growth = ratio * ((base + 1.0) / base) ** degree
        if growth < 1.0:
            tail = constant * base ** degree * ratio ** k / (1.0 - growth)
            if tail <= tolerance:
                logger.debug(f"series certified after {k} terms (tail bound {tail:.3e})")
                return total
        if k >= MAX_TERMS:
            raise NonConvergent(
                f"series did not reach tolerance {tolerance} within {MAX_TERMS} terms"
            )


def _geometric_sum(ctx: SeriesContext, ratio: float, h: int) -> float:
    closed = _geometric_closed_form(ctx.cost, ratio, h)
    if closed is not None:
        return closed
    bound = growth_bound(ctx.cost)
    return _truncated_sum(
        lambda k: ratio ** k * evaluate(ctx.cost, h + k),
        ratio,
        bound.degree,
        bound.constant,
        h,
        ctx.tolerance,
    )


def _check(ctx: SeriesContext, h: int) -> None:
    if h < 1:
        raise ValueError(f"series are defined for h >= 1, got {h}")
    if ctx.lam <= 0.0 or ctx.eps >= 1.0:
        raise NonConvergent(f"series diverge for λ={ctx.lam}, ε={ctx.eps}")


@lru_cache(maxsize=262144)
def theta(ctx: SeriesContext, h: int) -> float:
    """θ(h) = Σ_{k>=0} ε^k v(h+k)."""
    _check(ctx, h)
    return _geometric_sum(ctx, ctx.eps, h)


@lru_cache(maxsize=262144)
def psi(ctx: SeriesContext, h: int) -> float:
    """ψ(h) = Σ_{k>=0} (1-λ)^k v(h+k)."""
    _check(ctx, h)
    return _geometric_sum(ctx, 1.0 - ctx.lam, h)


def omega_quotient(ctx: SeriesContext, h: int) -> float:
    """ω(h) = (ψ(h) - θ(h)) / (1-λ-ε); undefined on the degenerate line."""
    _check(ctx, h)
    if ctx.degenerate:
        raise ValueError(f"quotient form of ω is undefined for ε = 1-λ (gap {ctx.gap:.3e})")
    return (psi(ctx, h) - theta(ctx, h)) / ctx.gap


@lru_cache(maxsize=262144)
def omega_series(ctx: SeriesContext, h: int) -> float:
    """
    ω(h) as the single series Σ_{k>=1} c_k v(h+k) with
    c_k = Σ_{i<k} (1-λ)^i ε^{k-1-i}.

    On the degenerate line c_k = k ε^{k-1}, which is the double series
    Σ_{k>=1} ε^{k-1} θ(h+k) collapsed; off it c_k = ((1-λ)^k - ε^k)/(1-λ-ε).
    """
    _check(ctx, h)
    r_arrival, r_error = 1.0 - ctx.lam, ctx.eps
    r_max = max(r_arrival, r_error)
    if r_max == 0.0:
        return evaluate(ctx.cost, h + 1)
    bound = growth_bound(ctx.cost)
    if bound.constant == 0.0:
        return 0.0
    # c_k v(h+k) <= (C / r_max) (1+h+k)^(p+1) r_max^k
    constant = bound.constant / r_max
    degree = bound.degree + 1.0
    total = 0.0
    coeff = 1.0
    error_power = 1.0
    k = 1
    while True:
        total += coeff * evaluate(ctx.cost, h + k)
        error_power *= r_error
        coeff = r_arrival * coeff + error_power
        k += 1
        base = 1.0 + h + k
        growth = r_max * ((base + 1.0) / base) ** degree
        if growth < 1.0:
            tail = constant * base ** degree * r_max ** k / (1.0 - growth)
            if tail <= ctx.tolerance:
                return total
        if k >= MAX_TERMS:
            raise NonConvergent(
                f"ω series did not reach tolerance {ctx.tolerance} within {MAX_TERMS} terms"
            )


@lru_cache(maxsize=262144)
def omega(ctx: SeriesContext, h: int) -> float:
    """ω(h); series branch near ε = 1-λ, quotient branch elsewhere."""
    _check(ctx, h)
    closed = _omega_closed_form(ctx, h)
    if closed is not None:
        return closed
    if ctx.degenerate or abs(ctx.gap) < QUOTIENT_MIN_GAP:
        return omega_series(ctx, h)
    return omega_quotient(ctx, h)


def series_values(ctx: SeriesContext, h: int) -> SeriesValues:
    return SeriesValues(h=h, theta=theta(ctx, h), psi=psi(ctx, h), omega=omega(ctx, h))


def brute_force_sum(ctx: SeriesContext, ratio: float, h: int) -> float:
    """Truncated Σ ratio^k v(h+k) without closed forms, for cross-checking them."""
    _check(ctx, h)
    bound = growth_bound(ctx.cost)
    return _truncated_sum(
        lambda k: ratio ** k * evaluate(ctx.cost, h + k),
        ratio,
        bound.degree,
        bound.constant,
        h,
        ctx.tolerance,
    )


__all__ = [
    "DEFAULT_TOLERANCE",
    "DEGENERACY_TOLERANCE",
    "NonConvergent",
    "SeriesContext",
    "SeriesValues",
    "brute_force_sum",
    "create_series_context",
    "omega",
    "omega_quotient",
    "omega_series",
    "psi",
    "series_values",
    "theta",
]
