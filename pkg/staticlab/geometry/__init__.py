"""Metrics in coordinates, their derivatives, and warped-product models."""

from .chart import Chart
from .diff import DiffEngine, DiffMode
from .fibers import FiberKind, FiberSpec
from .metric import (
    MetricField,
    ScalarField,
    SymbolicField,
    derivatives,
    make_chart_metric,
    make_scalar_field,
)
from .profiles import ExpressionProfile, OdeSystem, Profile, Trajectory, TrajectoryProfile
from .warped import (
    WarpStructure,
    as_profile,
    make_doubly_warped_product,
    make_warped_product,
)

__all__ = [
    "Chart",
    "DiffEngine",
    "DiffMode",
    "FiberKind",
    "FiberSpec",
    "MetricField",
    "ScalarField",
    "SymbolicField",
    "derivatives",
    "make_chart_metric",
    "make_scalar_field",
    "Profile",
    "ExpressionProfile",
    "OdeSystem",
    "Trajectory",
    "TrajectoryProfile",
    "WarpStructure",
    "as_profile",
    "make_warped_product",
    "make_doubly_warped_product",
]
