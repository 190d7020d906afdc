"""Exception hierarchy shared by the geometry, model and CLI layers."""

from __future__ import annotations

from collections.abc import Sequence

__all__ = [
    "StaticLabError",
    "DegenerateMetricError",
    "InvalidWarpError",
    "OutOfDomainError",
    "RegularValueError",
    "PreconditionError",
    "ModelConfigError",
]


class StaticLabError(Exception):
    """Base class for every error raised by staticlab."""


class DegenerateMetricError(StaticLabError, ValueError):
    """The metric is not positive definite at an evaluation point."""

    def __init__(self, point: Sequence[float], detail: str = "") -> None:
        self.point = tuple(float(v) for v in point)
        message = f"Metric is not positive definite at {self.point}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class InvalidWarpError(StaticLabError, ValueError):
    """A warping factor is not strictly positive on its domain."""


class OutOfDomainError(StaticLabError, ValueError):
    """A point lies outside the coordinate domain of a chart."""


class RegularValueError(StaticLabError, ValueError):
    """A requested level is not a regular value of the potential."""

    def __init__(self, level: float, min_gradient: float, detail: str = "") -> None:
        self.level = level
        self.min_gradient = min_gradient
        message = f"Level {level} is not a regular value (min |grad f| = {min_gradient:.3e})"
        if detail:
            message = f"{message}; {detail}"
        super().__init__(message)


class PreconditionError(StaticLabError, ValueError):
    """An operation was called outside the regime where it is defined."""


class ModelConfigError(StaticLabError, ValueError):
    """A model definition is malformed or cannot be resolved."""
