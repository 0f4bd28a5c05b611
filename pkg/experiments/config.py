"""
Experiment configuration: YAML (or JSON metadata) files validated into
pydantic models.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from cost import CostFunction
from policies import AVAILABLE_POLICIES
from sim import SimConfig

from .presets import merge, preset_defaults

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

ExperimentKind = Literal[
    "index_table",
    "oracle_check",
    "sim_run",
    "sweep",
    "preset_fig2",
    "preset_fig3",
    "preset_fig4",
]
OutputFormat = Literal["csv", "json"]

# section each kind needs
REQUIRED_SECTIONS: Dict[str, List[str]] = {
    "index_table": ["index_table"],
    "oracle_check": ["oracle_check"],
    "sim_run": ["sim"],
    "sweep": ["sim", "sweep"],
    "preset_fig2": ["sim", "sweep", "joint"],
    "preset_fig3": ["sim", "sweep"],
    "preset_fig4": ["sim", "sweep"],
}


class ConfigInvalid(ValueError):
    """Raised when a config file cannot be read or fails validation."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class GridMismatch(ValueError):
    """Raised when two result files do not cover the same grid."""


def _check_policies(policies: List[str]) -> List[str]:
    unknown = [p for p in policies if p not in AVAILABLE_POLICIES]
    if unknown:
        raise ValueError(f"unknown policies {unknown}, available: {list(AVAILABLE_POLICIES.keys())}")
    return policies


class IndexTableSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lam: float = Field(gt=0.0, le=1.0)
    eps: float = Field(ge=0.0, lt=1.0)
    cost: CostFunction
    a_max: int = Field(default=8, ge=1)
    d_max: int = Field(default=8, ge=0)
    d_cap: int = Field(default=10_000, ge=1)


class OracleCheckSection(BaseModel):
    """Closed-form index against bisection on value iteration, over a parameter grid."""

    model_config = ConfigDict(extra="forbid")

    lambdas: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.8, 1.0], min_length=1)
    epsilons: List[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5], min_length=1)
    costs: List[CostFunction] = Field(
        default_factory=lambda: [CostFunction.linear(), CostFunction.step_violation(5)], min_length=1
    )
    a_max: int = Field(default=8, ge=1)
    d_max: int = Field(default=8, ge=1)
    rvi_cap: int = Field(default=64, ge=4)
    tolerance: float = Field(default=1e-9, gt=0.0)
    rel_tolerance: float = Field(default=0.02, gt=0.0)
    abs_floor: float = Field(default=0.01, ge=0.0)

    @field_validator("lambdas")
    @classmethod
    def _lambdas_in_range(cls, values: List[float]) -> List[float]:
        if any(not 0.0 < v <= 1.0 for v in values):
            raise ValueError("every λ must lie in (0, 1]")
        return values

    @field_validator("epsilons")
    @classmethod
    def _epsilons_in_range(cls, values: List[float]) -> List[float]:
        if any(not 0.0 <= v < 1.0 for v in values):
            raise ValueError("every ε must lie in [0, 1)")
        return values


class SweepSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lambdas: Optional[List[float]] = Field(default=None, min_length=1)
    epsilons: Optional[List[float]] = Field(default=None, min_length=1)
    policies: List[str] = Field(default_factory=lambda: ["whittle"], min_length=1)

    @field_validator("policies")
    @classmethod
    def _policies_known(cls, value: List[str]) -> List[str]:
        return _check_policies(value)

    @field_validator("lambdas", "epsilons")
    @classmethod
    def _probabilities(cls, values: Optional[List[float]]) -> Optional[List[float]]:
        if values is not None and any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("grid values must be probabilities in [0, 1]")
        return values


class JointSection(BaseModel):
    """Caps of the joint value iteration used for the optimum."""

    model_config = ConfigDict(extra="forbid")

    a_max: int = Field(default=12, ge=2)
    d_max: int = Field(default=12, ge=2)
    tolerance: float = Field(default=1e-9, gt=0.0)


class ExperimentConfig(BaseModel):
    """
    One experiment: its kind, the section that kind needs, and output settings.

    Preset kinds start from the built-in defaults; any section given in the
    file is merged over them.
    """

    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    kind: ExperimentKind
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    format: OutputFormat = "csv"
    output: Optional[str] = None
    policies: Optional[List[str]] = None
    sim: Optional[SimConfig] = None
    sweep: Optional[SweepSection] = None
    index_table: Optional[IndexTableSection] = None
    oracle_check: Optional[OracleCheckSection] = None
    joint: Optional[JointSection] = None

    @model_validator(mode="before")
    @classmethod
    def _apply_preset(cls, data: Any) -> Any:
        if isinstance(data, dict):
            defaults = preset_defaults(str(data.get("kind", "")))
            if defaults:
                data = merge(defaults, data)
        return data

    @field_validator("schema_version")
    @classmethod
    def _supported_version(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}, expected {SCHEMA_VERSION}")
        return value

    @field_validator("policies")
    @classmethod
    def _policies_known(cls, value: Optional[List[str]]) -> Optional[List[str]]:
        return value if value is None else _check_policies(value)

    @model_validator(mode="after")
    def _sections_present(self) -> "ExperimentConfig":
        missing = [name for name in REQUIRED_SECTIONS[self.kind] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"experiment kind {self.kind} needs section(s) {missing}")
        if self.seed is not None and self.sim is not None and self.sim.seed != self.seed:
            self.sim = self.sim.model_copy(update={"seed": self.seed})
        return self

    def resolved(
        self,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        fmt: Optional[str] = None,
    ) -> "ExperimentConfig":
        """Copy with command-line overrides applied and the seed written out explicitly."""
        data = self.model_dump(mode="json")
        if seed is not None:
            data["seed"] = seed
        if fmt is not None:
            data["format"] = fmt
        if data.get("sim") is not None:
            if data["seed"] is None:
                data["seed"] = data["sim"]["seed"]
            if threads is not None:
                data["sim"]["workers"] = threads
        return load_config_dict(data)


def _error_field(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"]) or "<root>"


def load_config_dict(data: Any) -> ExperimentConfig:
    """
    Validate a parsed config mapping.

    A metadata file written by a previous run is accepted too; its
    ``resolved_config`` entry is used.
    """
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a mapping at the top level")
    if "resolved_config" in data:
        data = data["resolved_config"]
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        field = _error_field(e)
        message = e.errors()[0]["msg"]
        logger.error(f"invalid config at {field}: {message}")
        raise ConfigInvalid(f"{field}: {message}", field=field) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a YAML config (or a JSON metadata file) and validate it."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f) if path.suffix == ".json" else yaml.safe_load(f)
    except OSError as e:
        raise ConfigInvalid(f"cannot read config {path}: {e}") from e
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"{path} is not valid YAML or JSON: {e}") from e
    logger.debug(f"loaded config {path}")
    return load_config_dict(data)
