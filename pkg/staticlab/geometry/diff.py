"""Differentiation engine: central finite-difference stencils on array-valued callbacks.

All derivative arrays put the derivative indices first, so that the gradient of a
field with shape ``S`` at a point of an ``n``-dimensional chart has shape
``(n,) + S`` and ``result[k]`` is the partial derivative along coordinate ``k``.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DiffMode",
    "DiffEngine",
    "ArrayField",
]

type ArrayField = Callable[[np.ndarray], np.ndarray]

# (offset, weight) pairs
_FIRST_ORDER_4 = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
_FIRST_ORDER_2 = ((-1, -0.5), (1, 0.5))
_SECOND_ORDER_4 = (
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
)
_SECOND_ORDER_2 = ((-1, 1.0), (0, -2.0), (1, 1.0))


class DiffMode(str, Enum):
    """Where metric derivatives come from."""

    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class DiffEngine:
    """Finite-difference stencils and step sizes.

    ``step`` is used for first and second derivatives of metric components,
    ``third_order_step`` for the outer difference of third derivatives, and
    ``field_step`` for differencing tensor fields (covariant derivatives of
    Schouten, Weyl, Cotton, D, ...). ``field_step`` defaults to 1e-3 when metric
    derivatives are analytic and to 1e-2 otherwise, which keeps the roundoff of
    nested differences below the third-order tolerances.
    """

    mode: DiffMode = DiffMode.ANALYTIC
    step: float = 1e-3
    third_order_step: float = 1e-2
    field_step: float | None = None
    stencil_order: int = 4

    def __post_init__(self) -> None:
        if self.stencil_order not in (2, 4):
            raise ValueError(f"stencil_order must be 2 or 4, got {self.stencil_order}")
        for name in ("step", "third_order_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.field_step is not None and not self.field_step > 0:
            raise ValueError("field_step must be positive")

    @property
    def tensor_step(self) -> float:
        if self.field_step is not None:
            return self.field_step
        return 1e-3 if self.mode is DiffMode.ANALYTIC else 1e-2

    @property
    def _first(self) -> tuple[tuple[int, float], ...]:
        return _FIRST_ORDER_4 if self.stencil_order == 4 else _FIRST_ORDER_2

    @property
    def _second(self) -> tuple[tuple[int, float], ...]:
        return _SECOND_ORDER_4 if self.stencil_order == 4 else _SECOND_ORDER_2

    def gradient(self, fn: ArrayField, x: np.ndarray, h: float | None = None) -> np.ndarray:
        """Partial derivatives of ``fn`` at ``x``; derivative index first."""
        h = self.step if h is None else h
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        rows = []
        for k in range(n):
            acc = None
            for offset, weight in self._first:
                shifted = x.copy()
                shifted[k] += offset * h
                term = weight * np.asarray(fn(shifted), dtype=float)
                acc = term if acc is None else acc + term
            rows.append(acc / h)
        return np.stack(rows)

    def hessian(self, fn: ArrayField, x: np.ndarray, h: float | None = None) -> np.ndarray:
        """Second partial derivatives; symmetric in the two leading indices."""
        h = self.step if h is None else h
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        cache: dict[tuple[int, ...], np.ndarray] = {}

        def at(offsets: tuple[int, ...]) -> np.ndarray:
            if offsets not in cache:
                cache[offsets] = np.asarray(fn(x + h * np.asarray(offsets)), dtype=float)
            return cache[offsets]

        zero = (0,) * n
        shape = at(zero).shape
        out = np.zeros((n, n) + shape)
        for k in range(n):
            acc = np.zeros(shape)
            for offset, weight in self._second:
                key = list(zero)
                key[k] = offset
                acc += weight * at(tuple(key))
            out[k, k] = acc / h**2
        for k, m in itertools.combinations(range(n), 2):
            acc = np.zeros(shape)
            for (ok, wk), (om, wm) in itertools.product(self._first, self._first):
                key = list(zero)
                key[k] = ok
                key[m] = om
                acc += wk * wm * at(tuple(key))
            out[k, m] = out[m, k] = acc / h**2
        return out

    def third(self, fn: ArrayField, x: np.ndarray, h: float | None = None) -> np.ndarray:
        """Third partial derivatives (second-order accurate), fully symmetrized."""
        h3 = self.third_order_step if h is None else h
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        rows = []
        for k in range(n):
            plus = x.copy()
            minus = x.copy()
            plus[k] += h3
            minus[k] -= h3
            rows.append((self.hessian(fn, plus) - self.hessian(fn, minus)) / (2.0 * h3))
        raw = np.stack(rows)
        perms = list(itertools.permutations(range(3)))
        rest = tuple(range(3, raw.ndim))
        return sum(np.transpose(raw, p + rest) for p in perms) / len(perms)
