"""Run configuration, check results and the Suite strategy interface."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import DEFAULT_F_MIN, Tolerances
from ..errors import PreconditionError, RegularValueError
from ..quadrature import QuadratureRule
from ..statics import StaticModel

__all__ = [
    "SuiteName",
    "MODEL_SUITES",
    "CheckStatus",
    "CheckResult",
    "OdeParameters",
    "RunConfig",
    "SuiteContext",
    "Suite",
]


class SuiteName(str, Enum):
    """Available verification suites."""

    CURVATURE = "curvature"
    STATICS = "statics"
    LEVELSET = "levelset"
    INTEGRALS = "integrals"
    ODE = "ode"
    CATALOG = "catalog"


# Suites that run once per model; the others run once per invocation
MODEL_SUITES = frozenset(
    {SuiteName.CURVATURE, SuiteName.STATICS, SuiteName.LEVELSET, SuiteName.INTEGRALS}
)


class CheckStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class CheckResult:
    """One measured quantity compared against its tolerance."""

    suite: str
    model: str
    check: str
    status: CheckStatus
    value: float | None = None
    tolerance: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status is CheckStatus.FAILED

    def to_record(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "model": self.model,
            "check": self.check,
            "status": self.status.value,
            "passed": self.status is CheckStatus.PASSED,
            "value": self.value,
            "tolerance": self.tolerance,
            "details": self.details,
        }


class OdeParameters(BaseModel):
    """Warp system parameters for the ode suite."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(3, ge=3)
    R: float = Field(6.0, gt=0)
    a: float = 0.9
    r0: float = Field(1.0, gt=0)
    periods: int = Field(10, ge=1)


class RunConfig(BaseModel):
    """Validated settings for one verification run."""

    model_config = ConfigDict(extra="forbid")

    models: list[str] = Field(default_factory=list)
    suites: list[SuiteName] = Field(
        default_factory=lambda: [SuiteName.CURVATURE, SuiteName.STATICS]
    )
    tolerances: dict[str, float] = Field(default_factory=dict)
    samples: int = Field(3, ge=1, le=1000)
    heavy_samples: int = Field(2, ge=1, le=100)
    p_values: list[int] = Field(default_factory=lambda: [2])
    output_dir: Path = Path("staticlab-reports")
    seed: int = 0
    f_min: float = Field(DEFAULT_F_MIN, gt=0)
    quadrature_order: int = Field(16, ge=2, le=256)
    ode: OdeParameters = Field(default_factory=OdeParameters)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: dict[str, float]) -> dict[str, float]:
        Tolerances().with_overrides(value)
        return value

    @field_validator("p_values")
    @classmethod
    def _powers(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("At least one p value is required")
        if any(p < 2 for p in value):
            raise ValueError(f"p values must be at least 2, got {value}")
        return sorted(set(value))

    @model_validator(mode="after")
    def _models_for_model_suites(self) -> RunConfig:
        if not self.models and any(s in MODEL_SUITES for s in self.suites):
            raise ValueError("Model suites were selected but no model was given")
        return self

    def tolerance_set(self) -> Tolerances:
        return Tolerances().with_overrides(self.tolerances)


@dataclass
class SuiteContext:
    """Everything a suite needs besides the model."""

    tolerances: Tolerances = field(default_factory=Tolerances)
    samples: int = 3
    heavy_samples: int = 2
    seed: int = 0
    p_values: tuple[int, ...] = (2,)
    f_min: float = DEFAULT_F_MIN
    rule: QuadratureRule = field(default_factory=QuadratureRule)
    ode: OdeParameters = field(default_factory=OdeParameters)

    @classmethod
    def from_config(cls, config: RunConfig) -> SuiteContext:
        return cls(
            tolerances=config.tolerance_set(),
            samples=config.samples,
            heavy_samples=config.heavy_samples,
            seed=config.seed,
            p_values=tuple(config.p_values),
            f_min=config.f_min,
            rule=QuadratureRule(order=config.quadrature_order, periodic_nodes=2 * config.quadrature_order),
            ode=config.ode,
        )


class Suite(ABC):
    """Abstract base class for a verification suite."""

    name: SuiteName

    def __init__(self, context: SuiteContext) -> None:
        self.context = context
        self.artifacts: dict[str, list[dict[str, Any]]] = {}

    @abstractmethod
    def run(self, model: StaticModel | None) -> list[CheckResult]:
        """Runs the suite's checks and returns one result per check."""
        pass

    def _label(self, model: StaticModel | None) -> str:
        return model.name if model is not None else "-"

    def check(
        self,
        model: StaticModel | None,
        check: str,
        value: float,
        tolerance: float,
        **details: Any,
    ) -> CheckResult:
        status = CheckStatus.PASSED if value <= tolerance else CheckStatus.FAILED
        return CheckResult(self.name.value, self._label(model), check, status, float(value), tolerance, details)

    def skip(self, model: StaticModel | None, check: str, reason: str) -> CheckResult:
        return CheckResult(
            self.name.value, self._label(model), check, CheckStatus.SKIPPED, details={"reason": reason}
        )

    def guarded(self, model: StaticModel | None, check: str, fn: Any) -> list[CheckResult]:
        """Run ``fn`` and turn an unmet precondition into a skipped check."""
        try:
            return list(fn())
        except (PreconditionError, RegularValueError) as e:
            return [self.skip(model, check, str(e))]
