"""Metric and scalar fields on a chart.

Components are either sympy expressions (derivatives exact, compiled lazily per
order) or plain callables (derivatives from the finite-difference engine).
Profiles bound into the expressions are evaluated through their own derivative
interface, so a warp that comes out of an ODE integration is differentiated
exactly along its flow.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping, Sequence
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np
import sympy as sp
from loguru import logger

from ..errors import DegenerateMetricError
from .chart import Chart
from .diff import ArrayField, DiffEngine, DiffMode
from .profiles import Profile, freeze_profiles, profile_symbol

if TYPE_CHECKING:
    from .warped import WarpStructure

__all__ = [
    "ProfileBindings",
    "SymbolicField",
    "MetricField",
    "ScalarField",
    "make_chart_metric",
    "make_scalar_field",
    "derivatives",
]

type ProfileBindings = Mapping[str, tuple[Profile, int]]
"""Profile name -> (profile, index of the chart coordinate it is applied to)."""


class SymbolicField:
    """An array of sympy expressions with lazily compiled partial derivatives.

    Only unique entries are differentiated: derivative multi-indices are taken
    sorted, and ``layout`` maps the full component shape onto the unique entries.
    The gathered arrays are therefore exactly symmetric in derivative indices.
    """

    def __init__(
        self,
        chart: Chart,
        entries: Sequence[sp.Expr],
        layout: np.ndarray,
        bindings: ProfileBindings | None = None,
    ) -> None:
        self.chart = chart
        self.entries = [sp.sympify(e) for e in entries]
        self.layout = np.asarray(layout, dtype=int)
        self.bindings = dict(bindings or {})
        self._derived: dict[tuple[int, ...], list[sp.Expr]] = {(): self.entries}
        self._compiled: dict[int, tuple[Callable[..., Any], dict[str, int], np.ndarray]] = {}

    @property
    def shape(self) -> tuple[int, ...]:
        return self.layout.shape

    def _entries_for(self, combo: tuple[int, ...]) -> list[sp.Expr]:
        if combo not in self._derived:
            parent = self._entries_for(combo[:-1])
            symbol = self.chart.symbols[combo[-1]]
            self._derived[combo] = [sp.diff(e, symbol) for e in parent]
        return self._derived[combo]

    def _compile(self, order: int) -> tuple[Callable[..., Any], dict[str, int], np.ndarray]:
        if order in self._compiled:
            return self._compiled[order]
        n = self.chart.dimension
        combos = list(itertools.combinations_with_replacement(range(n), order))
        position = {combo: i for i, combo in enumerate(combos)}
        flat: list[sp.Expr] = []
        for combo in combos:
            flat.extend(self._entries_for(combo))
        frozen, orders = freeze_profiles(flat, self.bindings)
        orders = {k: v for k, v in orders.items() if v >= 0}
        args = list(self.chart.symbols)
        for name, top in sorted(orders.items()):
            args.extend(profile_symbol(name, k) for k in range(top + 1))
        fn = sp.lambdify(args, frozen, modules="numpy", cse=True)
        width = len(self.entries)
        gather = np.empty((n,) * order + self.shape, dtype=int)
        for multi in itertools.product(range(n), repeat=order):
            base = position[tuple(sorted(multi))] * width
            gather[multi] = base + self.layout
        logger.debug(f"Compiled order-{order} derivatives: {len(frozen)} unique expressions")
        self._compiled[order] = (fn, orders, gather)
        return self._compiled[order]

    def evaluate(self, x: np.ndarray, order: int = 0) -> np.ndarray:
        fn, orders, gather = self._compile(order)
        values: list[float] = []
        for name, top in sorted(orders.items()):
            profile, coordinate = self.bindings[name]
            values.extend(profile.derivatives(float(x[coordinate]), top))
        flat = np.array(fn(*x, *values), dtype=float).ravel()
        return flat[gather]


class _Source(Protocol):
    def evaluate(self, x: np.ndarray, order: int) -> np.ndarray: ...


class _CallableSource:
    """Derivatives of a callable by central finite differences."""

    def __init__(self, fn: ArrayField, engine: DiffEngine) -> None:
        self.fn = fn
        self.engine = engine

    def evaluate(self, x: np.ndarray, order: int) -> np.ndarray:
        match order:
            case 0:
                return np.asarray(self.fn(x), dtype=float)
            case 1:
                return self.engine.gradient(self.fn, x)
            case 2:
                return self.engine.hessian(self.fn, x)
            case 3:
                return self.engine.third(self.fn, x)
        raise ValueError(f"Derivative order must be 0..3, got {order}")


class _RestrictedSource:
    """Components of a parent metric with one coordinate frozen."""

    def __init__(self, parent: MetricField, index: int, value: float) -> None:
        self.parent = parent
        self.index = index
        self.value = value
        self.keep = [i for i in range(parent.dimension) if i != index]

    def embed(self, x: np.ndarray) -> np.ndarray:
        return np.insert(np.asarray(x, dtype=float), self.index, self.value)

    def evaluate(self, x: np.ndarray, order: int) -> np.ndarray:
        if order == 0:
            full = self.parent.components(self.embed(x))
        else:
            full = self.parent.derivatives(self.embed(x), order)
        for axis in range(full.ndim):
            full = np.take(full, self.keep, axis=axis)
        return full


class MetricField:
    """A Riemannian metric g_ij on a chart.

    Every evaluation checks positive definiteness of the components with a
    Cholesky factorization and raises DegenerateMetricError with the point.
    """

    def __init__(
        self,
        chart: Chart,
        source: _Source,
        engine: DiffEngine,
        name: str = "metric",
        symbolic: sp.Matrix | None = None,
        bindings: ProfileBindings | None = None,
    ) -> None:
        self.chart = chart
        self._source = source
        self.engine = engine
        self.name = name
        self.symbolic = symbolic
        self.bindings = dict(bindings or {})
        self.warp: WarpStructure | None = None

    @property
    def dimension(self) -> int:
        return self.chart.dimension

    @property
    def mode(self) -> DiffMode:
        return self.engine.mode

    def components(self, x: np.ndarray) -> np.ndarray:
        x = self.chart.check_point(x)
        g = self._source.evaluate(x, 0)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as e:
            raise DegenerateMetricError(x, f"eigenvalues {np.linalg.eigvalsh(g)}") from e
        return g

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.components(x))

    def derivatives(self, x: np.ndarray, order: int) -> np.ndarray:
        """Partial derivatives of g_ij of the given order; derivative indices first."""
        if order not in (1, 2, 3):
            raise ValueError(f"Derivative order must be 1, 2 or 3, got {order}")
        x = self.chart.check_point(x)
        return self._source.evaluate(x, order)

    def jet(self, x: np.ndarray, order: int = 2) -> list[np.ndarray]:
        """[g, dg, d2g, ...] up to ``order``."""
        return [self.components(x)] + [self.derivatives(x, k) for k in range(1, order + 1)]

    def volume_density(self, x: np.ndarray) -> float:
        return float(np.sqrt(np.linalg.det(self.components(x))))

    def restrict(self, index: int, value: float, name: str | None = None) -> MetricField:
        """Induced metric on the coordinate hypersurface ``x[index] = value``."""
        return MetricField(
            self.chart.without(index),
            _RestrictedSource(self, index, value),
            self.engine,
            name=name or f"{self.name}|{self.chart.coordinates[index]}={value:g}",
        )

    def with_engine(self, engine: DiffEngine) -> MetricField:
        """The same metric, differentiated by another engine."""
        if engine.mode is DiffMode.ANALYTIC:
            if self.symbolic is None:
                raise ValueError(f"{self.name} has no symbolic components")
            return make_chart_metric(self.chart, self.symbolic, self.bindings, self.name, engine)
        clone = MetricField(
            self.chart,
            _CallableSource(lambda x: self._source.evaluate(x, 0), engine),
            engine,
            name=self.name,
            symbolic=self.symbolic,
            bindings=self.bindings,
        )
        clone.warp = self.warp
        return clone

    def __repr__(self) -> str:
        return f"MetricField({self.name}, n={self.dimension}, mode={self.mode.value})"


class ScalarField:
    """A smooth scalar function on a chart with derivatives up to order 3."""

    def __init__(
        self,
        chart: Chart,
        source: _Source,
        name: str = "f",
        expr: sp.Expr | None = None,
        bindings: ProfileBindings | None = None,
    ) -> None:
        self.chart = chart
        self._source = source
        self.name = name
        self.expr = expr
        self.bindings = dict(bindings or {})

    def value(self, x: np.ndarray) -> float:
        return float(self._source.evaluate(np.asarray(x, dtype=float), 0))

    def __call__(self, x: np.ndarray) -> float:
        return self.value(x)

    def derivatives(self, x: np.ndarray, order: int) -> np.ndarray:
        return self._source.evaluate(np.asarray(x, dtype=float), order)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.derivatives(x, 1)

    def partial_hessian(self, x: np.ndarray) -> np.ndarray:
        return self.derivatives(x, 2)

    def shifted(self, constant: float) -> ScalarField:
        return self.perturbed(sp.Float(constant), f"{self.name}+{constant:g}")

    def perturbed(self, delta: sp.Expr | Callable[[np.ndarray], float], name: str) -> ScalarField:
        """f + delta, with delta an expression in the chart symbols or a callable."""
        if self.expr is not None and isinstance(delta, sp.Basic):
            return make_scalar_field(self.chart, self.expr + delta, self.bindings, name)
        if isinstance(delta, sp.Basic):
            delta_fn = sp.lambdify(self.chart.symbols, delta, "numpy")

            def extra(x: np.ndarray) -> float:
                return float(delta_fn(*x))
        else:
            extra = delta

        def combined(x: np.ndarray) -> float:
            return self.value(x) + extra(x)

        engine = getattr(self._source, "engine", DiffEngine(DiffMode.FINITE_DIFFERENCE))
        return make_scalar_field(self.chart, combined, name=name, engine=engine)

    def __repr__(self) -> str:
        return f"ScalarField({self.name}={self.expr if self.expr is not None else '<callable>'})"


def make_chart_metric(
    chart: Chart,
    components: sp.Matrix | Sequence[Sequence[Any]] | ArrayField,
    bindings: ProfileBindings | None = None,
    name: str = "metric",
    engine: DiffEngine | None = None,
) -> MetricField:
    """Build a MetricField from symbolic components or a component callback.

    Symbolic components in the chart symbols get exact derivatives unless a
    finite-difference engine is requested; callables always use finite
    differences.
    """
    n = chart.dimension
    if callable(components) and not isinstance(components, sp.MatrixBase):
        engine = engine or DiffEngine(DiffMode.FINITE_DIFFERENCE)
        if engine.mode is not DiffMode.FINITE_DIFFERENCE:
            raise ValueError("Callable metric components require a finite-difference engine")
        logger.info(f"Built metric {name} (n={n}, finite differences)")
        return MetricField(chart, _CallableSource(components, engine), engine, name=name)

    matrix = sp.Matrix(components)
    if matrix.shape != (n, n):
        raise ValueError(f"Metric components must be {n}x{n}, got {matrix.shape}")
    if any(sp.simplify(matrix[i, j] - matrix[j, i]) != 0 for i in range(n) for j in range(i)):
        raise ValueError(f"Metric components of {name} are not symmetric")
    engine = engine or DiffEngine(DiffMode.ANALYTIC)
    unique: list[sp.Expr] = []
    layout = np.empty((n, n), dtype=int)
    for i in range(n):
        for j in range(i, n):
            layout[i, j] = layout[j, i] = len(unique)
            unique.append(matrix[i, j])
    field = SymbolicField(chart, unique, layout, bindings)
    if engine.mode is DiffMode.ANALYTIC:
        source: _Source = field
    else:
        source = _CallableSource(lambda x: field.evaluate(x, 0), engine)
    logger.info(f"Built metric {name} (n={n}, {engine.mode.value})")
    return MetricField(chart, source, engine, name=name, symbolic=matrix, bindings=bindings)


def make_scalar_field(
    chart: Chart,
    expr: sp.Expr | str | float | Callable[[np.ndarray], float],
    bindings: ProfileBindings | None = None,
    name: str = "f",
    engine: DiffEngine | None = None,
) -> ScalarField:
    """A ScalarField from an expression in the chart symbols or from a callable."""
    if callable(expr) and not isinstance(expr, sp.Basic):
        engine = engine or DiffEngine(DiffMode.FINITE_DIFFERENCE)
        fn = expr
        return ScalarField(chart, _CallableSource(lambda x: np.asarray(fn(x)), engine), name)
    if isinstance(expr, str):
        local = {sym.name: sym for sym in chart.symbols}
        local.update({key: sp.Function(key) for key in (bindings or {})})
        expr = sp.sympify(expr, locals=local)
    expr = sp.sympify(expr)
    field = SymbolicField(chart, [expr], np.zeros((), dtype=int), bindings)
    return ScalarField(chart, field, name=name, expr=expr, bindings=bindings)


def derivatives(metric: MetricField, x: np.ndarray, order: int) -> np.ndarray:
    """∂g of the given order at x; derivative indices first."""
    return metric.derivatives(x, order)
