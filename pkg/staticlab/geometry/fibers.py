"""Einstein fibers with closed-form metrics and known Einstein constants."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
import sympy as sp

if TYPE_CHECKING:
    from .chart import Chart

__all__ = ["FiberKind", "FiberSpec"]

TWO_PI = 2.0 * math.pi


class FiberKind(str, Enum):
    SPHERE = "sphere"
    TORUS = "torus"
    HYPERBOLIC = "hyperbolic"
    SPHERE_PRODUCT = "sphere_product"


@dataclass(frozen=True)
class FiberSpec:
    """A compact (or locally modelled) Einstein manifold (E, g_E).

    Coordinates per kind:
      sphere          hyperspherical angles y1..y(m-1) in (0, pi), last angle periodic
      torus           m periodic coordinates of period ``length``
      hyperbolic      horospherical ``u`` on a bounded window plus m-1 coordinates
                      of period 1, metric rho^2 (du^2 + e^{2u} dy^2)
      sphere_product  S^2(rho) x S^2(rho), four coordinates
    """

    kind: FiberKind
    dimension: int
    radius: float = 1.0
    second_radius: float | None = None
    length: float = TWO_PI
    window: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ValueError(f"Fiber dimension must be at least 2, got {self.dimension}")
        if not self.radius > 0:
            raise ValueError(f"Fiber radius must be positive, got {self.radius}")
        if self.kind is FiberKind.SPHERE_PRODUCT:
            if self.dimension != 4:
                raise ValueError("S^2 x S^2 fibers have dimension 4")
            second = self.radius if self.second_radius is None else self.second_radius
            if not math.isclose(second, self.radius, rel_tol=0.0, abs_tol=1e-14):
                raise ValueError(
                    f"S^2({self.radius}) x S^2({second}) is not Einstein; radii must agree"
                )
            object.__setattr__(self, "second_radius", second)

    @classmethod
    def sphere(cls, dimension: int, radius: float = 1.0) -> FiberSpec:
        return cls(FiberKind.SPHERE, dimension, radius)

    @classmethod
    def torus(cls, dimension: int, length: float = TWO_PI) -> FiberSpec:
        return cls(FiberKind.TORUS, dimension, length=length)

    @classmethod
    def hyperbolic(
        cls, dimension: int, radius: float = 1.0, window: tuple[float, float] = (-1.0, 1.0)
    ) -> FiberSpec:
        return cls(FiberKind.HYPERBOLIC, dimension, radius, window=window)

    @classmethod
    def sphere_product(cls, radius: float = 1.0, second_radius: float | None = None) -> FiberSpec:
        return cls(FiberKind.SPHERE_PRODUCT, 4, radius, second_radius=second_radius)

    @property
    def einstein_constant(self) -> float:
        """lambda with Ric_E = lambda g_E."""
        m, rho2 = self.dimension, self.radius**2
        match self.kind:
            case FiberKind.SPHERE:
                return (m - 1) / rho2
            case FiberKind.TORUS:
                return 0.0
            case FiberKind.HYPERBOLIC:
                return -(m - 1) / rho2
            case FiberKind.SPHERE_PRODUCT:
                return 1.0 / rho2
        raise AssertionError(self.kind)

    @property
    def scalar_curvature(self) -> float:
        return self.dimension * self.einstein_constant

    @property
    def volume(self) -> float:
        m, rho = self.dimension, self.radius
        match self.kind:
            case FiberKind.SPHERE:
                return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2) * rho**m
            case FiberKind.TORUS:
                return self.length**m
            case FiberKind.HYPERBOLIC:
                lo, hi = self.window
                if m == 1:
                    return rho * (hi - lo)
                return rho**m * (math.exp((m - 1) * hi) - math.exp((m - 1) * lo)) / (m - 1)
            case FiberKind.SPHERE_PRODUCT:
                return (4.0 * math.pi * rho**2) ** 2
        raise AssertionError(self.kind)

    @property
    def label(self) -> str:
        match self.kind:
            case FiberKind.SPHERE:
                return f"S^{self.dimension}({self.radius:g})"
            case FiberKind.TORUS:
                return f"T^{self.dimension}"
            case FiberKind.HYPERBOLIC:
                return f"H^{self.dimension}({self.radius:g})"
            case FiberKind.SPHERE_PRODUCT:
                return f"S^2({self.radius:g})xS^2({self.radius:g})"
        raise AssertionError(self.kind)

    def coordinate_names(self, prefix: str = "y", offset: int = 0) -> tuple[str, ...]:
        return tuple(f"{prefix}{offset + i + 1}" for i in range(self.dimension))

    def domains(self) -> tuple[tuple[float, float], ...]:
        m = self.dimension
        match self.kind:
            case FiberKind.SPHERE:
                return ((0.0, math.pi),) * (m - 1) + ((0.0, TWO_PI),)
            case FiberKind.TORUS:
                return ((0.0, self.length),) * m
            case FiberKind.HYPERBOLIC:
                return (self.window,) + ((0.0, 1.0),) * (m - 1)
            case FiberKind.SPHERE_PRODUCT:
                return ((0.0, math.pi), (0.0, TWO_PI)) * 2
        raise AssertionError(self.kind)

    def periods(self) -> tuple[float | None, ...]:
        m = self.dimension
        match self.kind:
            case FiberKind.SPHERE:
                return (None,) * (m - 1) + (TWO_PI,)
            case FiberKind.TORUS:
                return (self.length,) * m
            case FiberKind.HYPERBOLIC:
                return (None,) + (1.0,) * (m - 1)
            case FiberKind.SPHERE_PRODUCT:
                return (None, TWO_PI) * 2
        raise AssertionError(self.kind)

    def reference_point(self) -> np.ndarray:
        """A generic fiber point away from coordinate singularities."""
        m = self.dimension
        match self.kind:
            case FiberKind.SPHERE:
                return np.array([1.2 - 0.1 * i for i in range(m - 1)] + [0.7])
            case FiberKind.TORUS:
                return np.full(m, 0.3)
            case FiberKind.HYPERBOLIC:
                lo, hi = self.window
                return np.array([0.5 * (lo + hi) + 0.1 * (hi - lo)] + [0.3] * (m - 1))
            case FiberKind.SPHERE_PRODUCT:
                return np.array([1.2, 0.7, 1.1, 0.4])
        raise AssertionError(self.kind)

    def metric_components(self, symbols: Sequence[sp.Symbol]) -> sp.Matrix:
        """Closed-form g_E in the given fiber coordinate symbols."""
        m = self.dimension
        if len(symbols) != m:
            raise ValueError(f"{self.label} needs {m} coordinate symbols, got {len(symbols)}")
        rho2 = sp.Float(self.radius) ** 2 if self.radius != 1.0 else sp.Integer(1)
        diagonal: list[sp.Expr] = []
        match self.kind:
            case FiberKind.SPHERE:
                weight = sp.Integer(1)
                for y in symbols:
                    diagonal.append(rho2 * weight)
                    weight = weight * sp.sin(y) ** 2
            case FiberKind.TORUS:
                diagonal = [sp.Integer(1)] * m
            case FiberKind.HYPERBOLIC:
                diagonal = [rho2] + [rho2 * sp.exp(2 * symbols[0])] * (m - 1)
            case FiberKind.SPHERE_PRODUCT:
                diagonal = [rho2, rho2 * sp.sin(symbols[0]) ** 2, rho2, rho2 * sp.sin(symbols[2]) ** 2]
        return sp.diag(*diagonal)

    def chart(self) -> Chart:
        from .chart import Chart

        return Chart(self.coordinate_names(), self.domains(), self.periods())

    def einstein_defect(self, points: int = 8, seed: int = 0) -> float:
        """max |Ric_E - lambda g_E| over random interior fiber points."""
        from ..curvature import ricci_scalar_schouten
        from .metric import make_chart_metric

        chart = self.chart()
        metric = make_chart_metric(chart, self.metric_components(chart.symbols), name=self.label)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for x in chart.sample_points(points, rng, margin=0.2):
            ric, _, _ = ricci_scalar_schouten(metric, x)
            g = metric.components(x)
            worst = max(worst, float(np.max(np.abs(ric.components - self.einstein_constant * g))))
        return worst
