"""
Per-UE parameters and state shared by the index policy, the oracle and the simulator.
"""

from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field

from cost import CostFunction


class UeConfig(BaseModel):
    """Packet generation probability λ, transmission error probability ε and cost of one UE."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(ge=0.0, le=1.0, description="packet generation probability λ")
    eps: float = Field(ge=0.0, le=1.0, description="transmission error probability ε")
    cost: CostFunction


@dataclass(frozen=True)
class UeState:
    """
    Queuing delay ``a`` of the buffered packet and staleness gap ``d``
    between it and the freshest delivered packet; the AoI is h = a + d.
    """

    a: int
    d: int

    def __post_init__(self):
        if self.a < 1:
            raise ValueError(f"queuing delay must be >= 1, got a={self.a}")
        if self.d < 0:
            raise ValueError(f"staleness gap must be >= 0, got d={self.d}")

    @property
    def h(self) -> int:
        return self.a + self.d
