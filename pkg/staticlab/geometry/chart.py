"""Coordinate charts: names, domains and periodicity of the coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from ..errors import OutOfDomainError

__all__ = ["Chart"]


@dataclass(frozen=True)
class Chart:
    """A coordinate chart with one interval per coordinate.

    Periodic coordinates carry their period; evaluation points on them are never
    rejected. Non-periodic coordinates must stay inside their (open) interval.
    """

    coordinates: tuple[str, ...]
    domains: tuple[tuple[float, float], ...]
    periods: tuple[float | None, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.coordinates)
        if not self.periods:
            object.__setattr__(self, "periods", (None,) * n)
        if n < 2:
            raise ValueError(f"A chart needs at least 2 coordinates, got {n}")
        if len(set(self.coordinates)) != n:
            raise ValueError(f"Coordinate names must be unique: {self.coordinates}")
        if len(self.domains) != n or len(self.periods) != n:
            raise ValueError(
                f"Chart with {n} coordinates needs {n} domains and {n} periods"
            )
        for name, (lo, hi), period in zip(
            self.coordinates, self.domains, self.periods, strict=True
        ):
            if not lo < hi:
                raise ValueError(f"Degenerate domain for '{name}': ({lo}, {hi})")
            if period is not None and not period > 0:
                raise ValueError(f"Period of '{name}' must be positive, got {period}")

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    @cached_property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(sp.Symbol(name, real=True) for name in self.coordinates)

    def index(self, name: str) -> int:
        try:
            return self.coordinates.index(name)
        except ValueError as e:
            raise KeyError(f"Unknown coordinate '{name}' in chart {self.coordinates}") from e

    def is_periodic(self, i: int) -> bool:
        return self.periods[i] is not None

    def check_point(self, x: np.ndarray | tuple[float, ...], margin: float = 0.0) -> np.ndarray:
        """Return x as an array, raising OutOfDomainError if it leaves the chart."""
        point = np.asarray(x, dtype=float)
        if point.shape != (self.dimension,):
            raise OutOfDomainError(
                f"Point {tuple(point.ravel())} has wrong shape for a "
                f"{self.dimension}-dimensional chart"
            )
        if not np.all(np.isfinite(point)):
            raise OutOfDomainError(f"Point {tuple(point)} is not finite")
        for i, (lo, hi) in enumerate(self.domains):
            if self.is_periodic(i):
                continue
            if not (lo + margin < point[i] < hi - margin):
                raise OutOfDomainError(
                    f"Coordinate '{self.coordinates[i]}' = {point[i]} outside "
                    f"({lo + margin}, {hi - margin})"
                )
        return point

    def sample_points(
        self, count: int, rng: np.random.Generator, margin: float = 0.0
    ) -> np.ndarray:
        """Uniform random points, kept `margin` away from non-periodic boundaries."""
        lows, highs = [], []
        for i, (lo, hi) in enumerate(self.domains):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(
                    f"Cannot sample unbounded coordinate '{self.coordinates[i]}'"
                )
            pad = 0.0 if self.is_periodic(i) else margin
            if not lo + pad < hi - pad:
                raise ValueError(
                    f"Margin {margin} leaves no room in the domain of "
                    f"'{self.coordinates[i]}'"
                )
            lows.append(lo + pad)
            highs.append(hi - pad)
        return rng.uniform(lows, highs, size=(count, self.dimension))

    def without(self, index: int) -> Chart:
        """The chart of the hypersurface where coordinate `index` is frozen."""
        keep = [i for i in range(self.dimension) if i != index]
        return Chart(
            coordinates=tuple(self.coordinates[i] for i in keep),
            domains=tuple(self.domains[i] for i in keep),
            periods=tuple(self.periods[i] for i in keep),
        )
