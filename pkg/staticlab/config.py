"""Configuration management with environment variable support and type safety.

This module provides the LabConfig dataclass for process-wide settings loaded from
environment variables, and the Tolerances dataclass holding every numerical
threshold the verification suites compare against.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

__all__ = [
    "LabConfig",
    "Tolerances",
    "DEFAULT_F_MIN",
]

DEFAULT_F_MIN = 1e-3


@dataclass(frozen=True)
class Tolerances:
    """Named thresholds, grouped by the derivative order of the quantity checked."""

    # Quantities built from at most second metric derivatives
    riemann: float = 1e-7
    second_order: float = 1e-8
    golden: float = 1e-7

    # Quantities that need third or fourth derivatives
    third_order: float = 1e-5
    bach: float = 3e-5
    bach_rewrite: float = 1e-4

    # Static models
    unified_residual: float = 1e-6
    trace_identity: float = 1e-8
    psi_routes: float = 1e-8
    d_routes: float = 1e-5
    d_flat: float = 1e-5

    # Level sets
    levelset_identity: float = 1e-5
    constancy: float = 1e-6
    gauss_codazzi: float = 1e-5
    weyl_normal: float = 1e-4
    einstein_slice: float = 1e-5

    # Integrals
    integral_identity: float = 1e-4
    quadrature_stability: float = 1e-6

    # ODE
    first_integrals: float = 1e-8
    closure: float = 1e-8

    def __post_init__(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if not value > 0:
                raise ValueError(f"Tolerance '{item.name}' must be positive, got {value}")

    def with_overrides(self, overrides: dict[str, float] | None) -> Tolerances:
        """Return a copy with the given named thresholds replaced."""
        if not overrides:
            return self
        known = {item.name for item in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ValueError(
                f"Unknown tolerance(s): {unknown}. Valid names: {sorted(known)}"
            )
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in {"1", "true", "yes", "on"}


@dataclass
class LabConfig:
    """Configuration for staticlab runs loaded from environment variables."""

    threads: int = 4
    output_dir: Path = Path("staticlab-reports")
    models_path: Path | None = None
    f_min: float = DEFAULT_F_MIN
    seed: int = 20240917
    debug: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if not self.f_min > 0:
            raise ValueError(f"f_min must be positive, got {self.f_min}")
        self.output_dir = Path(self.output_dir)
        if self.models_path is not None:
            self.models_path = Path(self.models_path)

    @classmethod
    def from_env(cls) -> LabConfig:
        """Load configuration from environment variables."""
        models_path = os.getenv("STATICLAB_MODELS_PATH")
        try:
            return cls(
                threads=int(os.getenv("STATICLAB_THREADS", "4")),
                output_dir=Path(os.getenv("STATICLAB_OUTPUT_DIR", "staticlab-reports")),
                models_path=Path(models_path) if models_path else None,
                f_min=float(os.getenv("STATICLAB_F_MIN", str(DEFAULT_F_MIN))),
                seed=int(os.getenv("STATICLAB_SEED", "20240917")),
                debug=_env_flag("STATICLAB_DEBUG"),
            )
        except ValueError as e:
            raise ValueError(f"Invalid staticlab environment configuration: {e}") from e

    def to_record(self) -> dict[str, Any]:
        return {
            "threads": self.threads,
            "output_dir": str(self.output_dir),
            "models_path": str(self.models_path) if self.models_path else None,
            "f_min": self.f_min,
            "seed": self.seed,
            "debug": self.debug,
            "tolerances": self.tolerances.as_dict(),
        }
