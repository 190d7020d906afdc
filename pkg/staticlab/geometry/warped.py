"""Warped-product constructions over Einstein fibers.

``make_warped_product`` builds ``ds^2 + r(s)^2 g_E`` and
``make_doubly_warped_product`` builds ``ds^2 + a(s)^2 g_E1 + b(s)^2 g_E2``. Both
attach a WarpStructure to the metric so that quadrature and level-set code can
use the cohomogeneity-one reduction (everything depends on s only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from loguru import logger

from ..errors import InvalidWarpError, PreconditionError
from .chart import Chart
from .diff import DiffEngine
from .fibers import FiberSpec
from .metric import MetricField, make_chart_metric
from .profiles import ExpressionProfile, Profile

__all__ = [
    "WarpStructure",
    "WarpLike",
    "as_profile",
    "make_warped_product",
    "make_doubly_warped_product",
]

type WarpLike = Profile | sp.Expr | str | float

S_SYMBOL = sp.Symbol("s", real=True)
WARP_SAMPLES = 129


def as_profile(name: str, warp: WarpLike, period: float | None = None) -> Profile:
    if isinstance(warp, Profile):
        return warp
    return ExpressionProfile(name, warp, period=period)


@dataclass(frozen=True)
class WarpBlock:
    fiber: FiberSpec
    profile: Profile
    offset: int

    @property
    def indices(self) -> range:
        return range(self.offset, self.offset + self.fiber.dimension)


@dataclass(frozen=True)
class WarpStructure:
    """Cohomogeneity-one layout: coordinate 0 is s, the rest are fiber blocks."""

    blocks: tuple[WarpBlock, ...]
    s_domain: tuple[float, float]
    period: float | None = None

    s_index = 0

    @property
    def fiber_volume(self) -> float:
        return math.prod(block.fiber.volume for block in self.blocks)

    @property
    def fiber_dimension(self) -> int:
        return sum(block.fiber.dimension for block in self.blocks)

    @property
    def profiles(self) -> dict[str, Profile]:
        return {block.profile.name: block.profile for block in self.blocks}

    def density(self, s: float) -> float:
        """Volume density of the slice at s relative to the product of fiber volumes."""
        return math.prod(block.profile(s) ** block.fiber.dimension for block in self.blocks)

    def reference_fiber_point(self) -> np.ndarray:
        return np.concatenate([block.fiber.reference_point() for block in self.blocks])

    def point(self, s: float, fiber_point: np.ndarray | None = None) -> np.ndarray:
        y = self.reference_fiber_point() if fiber_point is None else fiber_point
        return np.concatenate([[s], y])

    def fiber_points(self, count: int, rng: np.random.Generator, margin: float = 0.2) -> np.ndarray:
        """Random fiber points, away from polar singularities."""
        chunks = []
        for block in self.blocks:
            chunks.append(block.fiber.chart().sample_points(count, rng, margin=margin))
        return np.hstack(chunks)


def _check_positive(profile: Profile, s_domain: tuple[float, float], period: float | None) -> None:
    lo, hi = s_domain
    if period is None:
        pad = 1e-6 * (hi - lo)
        grid = np.linspace(lo + pad, hi - pad, WARP_SAMPLES)
    else:
        grid = np.linspace(lo, lo + period, WARP_SAMPLES)
    values = np.array([profile(s) for s in grid])
    if not np.all(values > 0):
        worst = int(np.argmin(values))
        raise InvalidWarpError(
            f"Warp {profile.name} is not positive: {profile.name}({grid[worst]:.6g}) = "
            f"{values[worst]:.6g}"
        )


def _product_chart(
    fibers: list[FiberSpec], s_domain: tuple[float, float], period: float | None
) -> Chart:
    names: list[str] = ["s"]
    domains: list[tuple[float, float]] = [s_domain]
    periods: list[float | None] = [period]
    for fiber in fibers:
        names.extend(fiber.coordinate_names(offset=len(names) - 1))
        domains.extend(fiber.domains())
        periods.extend(fiber.periods())
    return Chart(tuple(names), tuple(domains), tuple(periods))


def _assemble(
    blocks: list[tuple[FiberSpec, Profile]],
    s_domain: tuple[float, float],
    period: float | None,
    name: str,
    engine: DiffEngine | None,
) -> MetricField:
    chart = _product_chart([fiber for fiber, _ in blocks], s_domain, period)
    s = chart.symbols[0]
    n = chart.dimension
    matrix = sp.zeros(n, n)
    matrix[0, 0] = sp.Integer(1)
    structure: list[WarpBlock] = []
    offset = 1
    for fiber, profile in blocks:
        warp = sp.Function(profile.name)(s)
        symbols = chart.symbols[offset : offset + fiber.dimension]
        matrix[offset : offset + fiber.dimension, offset : offset + fiber.dimension] = (
            warp**2 * fiber.metric_components(symbols)
        )
        structure.append(WarpBlock(fiber, profile, offset))
        offset += fiber.dimension
    bindings = {profile.name: (profile, 0) for _, profile in blocks}
    metric = make_chart_metric(chart, matrix, bindings, name=name, engine=engine)
    metric.warp = WarpStructure(tuple(structure), s_domain, period)
    return metric


def make_warped_product(
    r: WarpLike,
    fiber: FiberSpec,
    n: int,
    s_domain: tuple[float, float] = (0.0, 2.0 * math.pi),
    period: float | None = None,
    name: str = "warped",
    engine: DiffEngine | None = None,
) -> MetricField:
    """ds^2 + r(s)^2 g_E on (s-interval) x E."""
    if n < 3:
        raise PreconditionError(f"Warped products need n >= 3, got {n}")
    if fiber.dimension != n - 1:
        raise PreconditionError(
            f"Fiber {fiber.label} has dimension {fiber.dimension}, expected {n - 1}"
        )
    profile = as_profile("r", r, period)
    _check_positive(profile, s_domain, period)
    metric = _assemble([(fiber, profile)], s_domain, period, name, engine)
    logger.info(f"Warped product {name}: ds^2 + {profile.name}(s)^2 g_{fiber.label}")
    return metric


def make_doubly_warped_product(
    a: WarpLike,
    b: WarpLike,
    first: FiberSpec,
    second: FiberSpec,
    s_domain: tuple[float, float],
    period: float | None = None,
    name: str = "doubly_warped",
    engine: DiffEngine | None = None,
) -> MetricField:
    """ds^2 + a(s)^2 g_E1 + b(s)^2 g_E2."""
    first_profile = as_profile("a", a, period)
    second_profile = as_profile("b", b, period)
    if first_profile.name == second_profile.name:
        raise ValueError("The two warps need distinct profile names")
    for profile in (first_profile, second_profile):
        _check_positive(profile, s_domain, period)
    metric = _assemble(
        [(first, first_profile), (second, second_profile)], s_domain, period, name, engine
    )
    logger.info(
        f"Doubly warped product {name}: ds^2 + {first_profile.name}^2 g_{first.label}"
        f" + {second_profile.name}^2 g_{second.label}"
    )
    return metric
