"""Warped vacuum static spaces ds² + r(s)² g_E and their classification catalog.

With c = R/(n(n-1)) the reduced system is

    f'' + (n-1)(r'/r) f' + (R/(n-1)) f = 0,    r' f' = r'' f,

and it has two first integrals

    a = r^{n-1} r'' + c rⁿ,
    k = r'² + c r² + (2a/(n-2)) r^{2-n}.

The fiber E must be Einstein with Ric_E = (n-2) k g_E. Integration uses
r'' = a r^{1-n} - c r, so a is a parameter of the flow and its conservation is
monitored through the independent route r'' = r' f'/f. The integral k turns
the r-equation into motion in the potential V(r) = c r² + (2a/(n-2)) r^{2-n}.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
import sympy as sp
from loguru import logger

from .config import Tolerances
from .curvature import bach, cotton, ricci_scalar_schouten
from .errors import PreconditionError
from .geometry.chart import Chart
from .geometry.fibers import FiberSpec
from .geometry.metric import make_chart_metric, make_scalar_field
from .geometry.profiles import ExpressionProfile, OdeSystem, Trajectory
from .geometry.warped import make_warped_product
from .levelset import einstein_slice_check
from .statics import ModelKind, StaticModel, trajectory_potential, vacuum_static_residual

__all__ = [
    "OdeState",
    "FirstIntegrals",
    "KobayashiSystem",
    "WarpTrajectory",
    "EffectivePotential",
    "PeriodicWarp",
    "CatalogEntry",
    "Certification",
    "first_integrals",
    "integrate",
    "effective_potential",
    "find_periodic_warp",
    "fiber_for",
    "periodic_warp_model",
    "build_catalog",
    "certify",
]

COLLAPSE_RADIUS = 1e-6
TRAJECTORY_COLUMNS = ("s", "r", "r_prime", "f", "f_prime", "a", "k")

_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class OdeState:
    s: float
    r: float
    r_prime: float
    f: float
    f_prime: float
    n: int
    R: float

    def __post_init__(self) -> None:
        if self.n < 3:
            raise PreconditionError(f"The warp system needs n >= 3, got {self.n}")
        if not self.r > 0:
            raise PreconditionError(f"The warp must be positive, got r = {self.r}")

    @property
    def c(self) -> float:
        return self.R / (self.n * (self.n - 1))

    def vector(self) -> np.ndarray:
        return np.array([self.r, self.r_prime, self.f, self.f_prime])

    def second_derivative(self) -> float:
        """r'' from r' f' = r'' f, which fixes it wherever f != 0."""
        if self.f != 0.0:
            return self.r_prime * self.f_prime / self.f
        raise PreconditionError(
            f"r'' is not determined by the state at s={self.s} (f = 0); pass a explicitly"
        )


@dataclass(frozen=True)
class FirstIntegrals:
    a: float
    k: float

    def drift(self, other: FirstIntegrals) -> float:
        return max(abs(self.a - other.a), abs(self.k - other.k))


def _integrals(n: int, c: float, r: float, r_prime: float, r_second: float) -> FirstIntegrals:
    a = r ** (n - 1) * r_second + c * r**n
    k = r_prime**2 + c * r**2 + (2.0 * a / (n - 2)) * r ** (2 - n)
    return FirstIntegrals(float(a), float(k))


def first_integrals(state: OdeState, r_second: float | None = None) -> FirstIntegrals:
    """a and k at a state; r'' comes from r' f' = r'' f unless given."""
    if r_second is None:
        r_second = state.second_derivative()
    return _integrals(state.n, state.c, state.r, state.r_prime, r_second)


@dataclass(frozen=True)
class EffectivePotential:
    n: int
    R: float
    a: float
    center: float | None
    depth: float | None
    small_period: float | None

    @property
    def has_well(self) -> bool:
        return self.center is not None

    def __call__(self, r: float) -> float:
        c = self.R / (self.n * (self.n - 1))
        return c * r**2 + (2.0 * self.a / (self.n - 2)) * r ** (2 - self.n)

    def describe(self) -> str:
        if not self.has_well:
            return f"V(r) for n={self.n}, R={self.R:g}, a={self.a:g} has no well"
        return (
            f"V(r) for n={self.n}, R={self.R:g}, a={self.a:g}: well at r*={self.center:.10g}, "
            f"V(r*)={self.depth:.10g}, small-oscillation period {self.small_period:.10g}"
        )


def effective_potential(n: int, R: float, a: float) -> EffectivePotential:
    """V(r) = c r² + (2a/(n-2)) r^{2-n}; a well exists iff R > 0 and a > 0."""
    if R > 0 and a > 0:
        c = R / (n * (n - 1))
        center = (a / c) ** (1.0 / n)
        depth = c * center**2 + (2.0 * a / (n - 2)) * center ** (2 - n)
        return EffectivePotential(n, R, a, center, depth, 2.0 * math.pi * math.sqrt((n - 1) / R))
    return EffectivePotential(n, R, a, None, None, None)


@dataclass(frozen=True)
class KobayashiSystem:
    n: int
    R: float
    a: float

    @property
    def c(self) -> float:
        return self.R / (self.n * (self.n - 1))

    def potential(self) -> EffectivePotential:
        return effective_potential(self.n, self.R, self.a)

    def r_second(self, r: float) -> float:
        return self.a * r ** (1 - self.n) - self.c * r

    @cached_property
    def ode(self) -> OdeSystem:
        r, rp, f, fp = sp.symbols("r rp f fp", real=True)
        n, R, a = self.n, sp.Float(self.R), sp.Float(self.a)
        c = R / (n * (n - 1))
        return OdeSystem(
            ("r", "rp", "f", "fp"),
            (rp, a * r ** (1 - n) - c * r, fp, -(n - 1) * (rp / r) * fp - (R / (n - 1)) * f),
            name=f"warp(n={self.n}, R={self.R:g}, a={self.a:g})",
        )

    def integrals_at(self, s: float, y: np.ndarray) -> FirstIntegrals:
        """a from r'' = r' f'/f where f is away from zero, else from the flow; k from (r, r')."""
        r, rp, f, fp = (float(v) for v in y)
        r_second = rp * fp / f if abs(f) > 1e-3 else self.r_second(r)
        return _integrals(self.n, self.c, r, rp, r_second)

    def solve(
        self,
        state: OdeState,
        span: tuple[float, float],
        rtol: float = 1e-12,
        atol: float = 1e-14,
        period: float | None = None,
    ) -> WarpTrajectory:
        collapse = _terminal(lambda _s, y: y[0] - COLLAPSE_RADIUS)
        trajectory = self.ode.solve(
            state.s, state.vector(), span, rtol=rtol, atol=atol, events=(collapse,), period=period
        )
        return WarpTrajectory(self, trajectory, collapsed=trajectory.termination is not None)


def _terminal(fn: Any, direction: float = 0.0) -> Any:
    fn.terminal = True
    fn.direction = direction
    return fn


@dataclass
class WarpTrajectory:
    """A solution of the warp system, with first-integral monitoring."""

    system: KobayashiSystem
    trajectory: Trajectory
    collapsed: bool = False

    @property
    def span(self) -> tuple[float, float]:
        return self.trajectory.span

    def rows(self, count: int = 257) -> list[dict[str, float]]:
        grid, states = self.trajectory.sample(count)
        out = []
        for s, y in zip(grid, states, strict=True):
            integrals = self.system.integrals_at(s, y)
            out.append(dict(zip(TRAJECTORY_COLUMNS, (s, *y, integrals.a, integrals.k), strict=True)))
        return out

    def drift(self, count: int = 513) -> FirstIntegrals:
        """Largest deviation of a and k from the system constants along the span."""
        k0 = self.k
        rows = self.rows(count)
        return FirstIntegrals(
            max(abs(row["a"] - self.system.a) for row in rows),
            max(abs(row["k"] - k0) for row in rows),
        )

    def drift_ok(self, tolerance: float = _TOLERANCES.first_integrals, count: int = 513) -> bool:
        d = self.drift(count)
        return max(d.a, d.k) <= tolerance * (1.0 + abs(self.system.a) + abs(self.k))

    @property
    def k(self) -> float:
        y0 = self.trajectory.initial_state
        return _integrals(
            self.system.n, self.system.c, y0[0], y0[1], self.system.r_second(y0[0])
        ).k

    def proportionality_residual(self, count: int = 257) -> float:
        """max |f - κ r'| with κ fitted by least squares; zero when f ∝ r'."""
        _, states = self.trajectory.sample(count)
        rp, f = states[:, 1], states[:, 2]
        if float(np.max(np.abs(rp))) < 1e-12:
            raise PreconditionError("r is constant on this trajectory; f is not tied to r'")
        kappa = float(rp @ f / (rp @ rp))
        return float(np.max(np.abs(f - kappa * rp)))


def integrate(
    state: OdeState,
    span: tuple[float, float],
    a: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> WarpTrajectory:
    """Integrate the warp system from ``state`` over ``span``.

    Without ``a`` the first integral is read off the state through r'' = r' f'/f.
    Reaching r = 0 stops the integration and marks the trajectory collapsed.
    """
    if a is None:
        a = first_integrals(state).a
    system = KobayashiSystem(state.n, state.R, a)
    result = system.solve(state, span, rtol=rtol, atol=atol)
    if result.collapsed:
        logger.warning(f"{system.ode.name}: warp collapsed, {result.trajectory.termination}")
    return result


@dataclass
class PeriodicWarp:
    system: KobayashiSystem
    solution: WarpTrajectory
    period: float
    closure: float
    constant: bool

    @property
    def k(self) -> float:
        return self.solution.k


def _closure(solution: WarpTrajectory, period: float) -> float:
    start = solution.trajectory.initial_state
    end = solution.trajectory.state(solution.trajectory.s0 + period)
    return float(abs(end[0] - start[0]) + abs(end[1] - start[1]))


def find_periodic_warp(
    n: int,
    R: float,
    a: float,
    r0: float = 1.0,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> PeriodicWarp | None:
    """Shoot from the turning point r(0) = r0, r'(0) = 0 to the next turning point.

    The half period is the first zero of r' after s = 0; f is normalized as
    f = r'/|r''(0)|. When r0 is the well center the warp is constant and f
    oscillates with the small-oscillation period.
    """
    if not R > 0:
        raise PreconditionError(f"Periodic warps need R > 0, got {R}")
    potential = effective_potential(n, R, a)
    if not potential.has_well:
        logger.warning(f"No periodic warp: {potential.describe()}")
        return None
    system = KobayashiSystem(n, R, a)
    r_second = system.r_second(r0)
    scale = max(1.0, abs(r0))
    if abs(r_second) <= 1e-12 * scale:
        period = potential.small_period
        state = OdeState(0.0, r0, 0.0, 0.0, 1.0, n, R)
        solution = system.solve(state, (0.0, period), rtol, atol, period=period)
        closure = _closure(solution, period)
        logger.info(f"Constant warp r = {r0:g} at the well center; period {period:.10g}")
        return PeriodicWarp(system, solution, period, closure, constant=True)

    state = OdeState(0.0, r0, 0.0, 0.0, math.copysign(1.0, r_second), n, R)
    turning = _terminal(lambda _s, y: y[1], direction=-math.copysign(1.0, r_second))
    horizon = 50.0 * potential.small_period
    first_turn = system.ode.solve(0.0, state.vector(), (0.0, horizon), rtol, atol, events=(turning,))
    if first_turn.termination is None:
        logger.warning(f"No turning point of r within s <= {horizon:g}: {potential.describe()}")
        return None
    period = 2.0 * first_turn.span[1]
    solution = system.solve(state, (0.0, period), rtol, atol, period=period)
    closure = _closure(solution, period)
    logger.info(
        f"Periodic warp n={n}, R={R:g}, a={a:g}, r0={r0:g}: period {period:.12g}, "
        f"closure {closure:.2e}"
    )
    return PeriodicWarp(system, solution, period, closure, constant=False)


def fiber_for(n: int, k: float, product: bool = False) -> FiberSpec:
    """Einstein fiber of dimension n-1 with Ric_E = (n-2) k g_E."""
    m = n - 1
    lam = (n - 2) * k
    if abs(lam) < 1e-14:
        return FiberSpec.torus(m)
    if lam > 0:
        if product:
            return FiberSpec.sphere_product(1.0 / math.sqrt(lam))
        return FiberSpec.sphere(m, math.sqrt((m - 1) / lam))
    return FiberSpec.hyperbolic(m, math.sqrt((m - 1) / -lam))


def periodic_warp_model(warp: PeriodicWarp, name: str, product: bool = False) -> StaticModel:
    """The vacuum static space S¹ ×_r E built from a shooting result."""
    n = warp.system.n
    trajectory = warp.solution.trajectory
    fiber = fiber_for(n, warp.k, product)
    metric = make_warped_product(
        trajectory.profile("r"), fiber, n, s_domain=(0.0, warp.period), period=warp.period, name=name
    )
    return StaticModel(
        name, metric, trajectory_potential(metric, trajectory), ModelKind.VACUUM_STATIC,
        trajectory=trajectory,
    )


@dataclass
class Certification:
    vacuum_static: float
    bach: float
    scalar_curvature_error: float
    slice_deviation: float | None = None
    slice_constant_error: float | None = None
    cotton: float | None = None

    def passed(self, tolerances: Tolerances = _TOLERANCES) -> bool:
        checks = [
            self.vacuum_static <= tolerances.unified_residual,
            self.bach <= tolerances.bach,
            self.scalar_curvature_error <= tolerances.golden * 10,
        ]
        if self.slice_deviation is not None:
            checks.append(self.slice_deviation <= tolerances.einstein_slice)
        if self.slice_constant_error is not None:
            checks.append(self.slice_constant_error <= tolerances.einstein_slice)
        if self.cotton is not None:
            checks.append(self.cotton <= tolerances.third_order)
        return all(checks)


@dataclass
class CatalogEntry:
    """One classified vacuum static space with its expected invariants."""

    name: str
    dimension: int
    tags: tuple[str, ...]
    recipe: dict[str, Any]
    model: StaticModel
    scalar_curvature: float
    slice_constant: float | None = None
    slice_s: float | None = None
    compact: bool = True
    certification: Certification | None = None

    def to_record(self, tolerances: Tolerances = _TOLERANCES) -> dict[str, Any]:
        record: dict[str, Any] = {
            "name": self.name,
            "dimension": self.dimension,
            "tags": list(self.tags),
            "recipe": self.recipe,
            "R": self.scalar_curvature,
            "expected_slice_constant": self.slice_constant,
            "compact": self.compact,
        }
        if self.certification is not None:
            record.update(
                {
                    "vacuum_static_residual": self.certification.vacuum_static,
                    "bach_max": self.certification.bach,
                    "scalar_curvature_error": self.certification.scalar_curvature_error,
                    "slice_deviation": self.certification.slice_deviation,
                    "slice_constant_error": self.certification.slice_constant_error,
                    "cotton_max": self.certification.cotton,
                    "passed": self.certification.passed(tolerances),
                }
            )
        return record


def certify(
    entry: CatalogEntry, samples: int = 3, seed: int = 0, bach_samples: int = 2
) -> Certification:
    """Vacuum static residual, Bach tensor and Einstein slice for one entry."""
    model = entry.model
    points = model.sample_points(samples, seed)
    vacuum = max(vacuum_static_residual(model.metric, model.f, p).max_abs() for p in points)
    b = max(bach(model.metric, p).max_abs() for p in points[:bach_samples])
    r_error = max(
        abs(ricci_scalar_schouten(model.metric, p)[1] - entry.scalar_curvature) for p in points
    )
    result = Certification(vacuum, b, r_error)
    if entry.dimension == 3:
        result.cotton = max(cotton(model.metric, p).max_abs() for p in points[:bach_samples])
    if entry.slice_s is not None and model.metric.warp is not None:
        level = model.f.value(model.metric.warp.point(entry.slice_s))
        check = einstein_slice_check(model, level, entry.slice_constant, s_hint=entry.slice_s)
        result.slice_deviation = check.deviation
        result.slice_constant_error = check.constant_error
    logger.info(
        f"Certified {entry.name}: vacuum static {vacuum:.2e}, Bach {b:.2e}, "
        f"R error {r_error:.2e}, slice constant error {result.slice_constant_error}"
    )
    entry.certification = result
    return result


def _closed_form_entry(
    name: str,
    n: int,
    tags: tuple[str, ...],
    R: float,
    r: str | float,
    f: str,
    fiber: FiberSpec,
    s_domain: tuple[float, float],
    slice_s: float,
    period: float | None = None,
    compact: bool = True,
) -> CatalogEntry:
    profile = ExpressionProfile("r", r, period=period)
    metric = make_warped_product(profile, fiber, n, s_domain=s_domain, period=period, name=name)
    potential = make_scalar_field(metric.chart, f)
    model = StaticModel(name, metric, potential, ModelKind.VACUUM_STATIC)
    s = slice_s
    integrals = _integrals(n, R / (n * (n - 1)), profile(s), profile.derivative(s, 1), profile.derivative(s, 2))
    return CatalogEntry(
        name, n, tags,
        {"construction": "closed_form", "r": str(r), "f": f, "fiber": fiber.label, "a": integrals.a, "k": integrals.k},
        model, R, (n - 2) * integrals.k, slice_s, compact,
    )


def _ode_entry(
    name: str,
    n: int,
    tags: tuple[str, ...],
    R: float,
    a: float,
    window: tuple[float, float],
    slice_s: float,
    r0: float = 1.0,
) -> CatalogEntry:
    system = KobayashiSystem(n, R, a)
    r_second = system.r_second(r0)
    state = OdeState(0.0, r0, 0.0, 0.0, 1.0 if r_second >= 0 else -1.0, n, R)
    solution = system.solve(state, window)
    fiber = fiber_for(n, solution.k)
    trajectory = solution.trajectory
    metric = make_warped_product(trajectory.profile("r"), fiber, n, s_domain=window, name=name)
    model = StaticModel(
        name, metric, trajectory_potential(metric, trajectory), ModelKind.VACUUM_STATIC,
        trajectory=trajectory,
    )
    return CatalogEntry(
        name, n, tags,
        {"construction": "kobayashi", "R": R, "a": a, "r0": r0, "k": solution.k, "window": list(window)},
        model, R, (n - 2) * solution.k, slice_s, compact=False,
    )


def _flat_torus() -> CatalogEntry:
    chart = Chart(("x1", "x2", "x3"), ((0.0, 2 * math.pi),) * 3, (2 * math.pi,) * 3)
    metric = make_chart_metric(chart, sp.eye(3), name="flat_t3")
    model = StaticModel("flat_t3", metric, make_scalar_field(chart, 1.0), ModelKind.VACUUM_STATIC)
    return CatalogEntry("flat_t3", 3, ("flat",), {"construction": "chart"}, model, 0.0)


def _periodic_entry(name: str, n: int, R: float, a: float, product: bool = False) -> CatalogEntry:
    warp = find_periodic_warp(n, R, a)
    if warp is None:
        raise PreconditionError(f"{name}: no periodic warp for n={n}, R={R}, a={a}")
    model = periodic_warp_model(warp, name, product)
    return CatalogEntry(
        name, n, ("periodic-r warped",),
        {"construction": "kobayashi", "R": R, "a": a, "r0": 1.0, "k": warp.k, "period": warp.period, "closure": warp.closure},
        model, R, (n - 2) * warp.k, warp.period / 8.0,
    )


def build_catalog(names: Sequence[str] | None = None, certified: bool = True) -> list[CatalogEntry]:
    """Every classified family, normalized as R in {n(n-1), 0, -n(n-1)} (S¹×S² at R = 2)."""
    builders = {
        "flat_t3": _flat_torus,
        "s3": lambda: _closed_form_entry(
            "s3", 3, ("S^n",), 6.0, "sin(s)", "cos(s)", FiberSpec.sphere(2), (0.0, math.pi), 1.0
        ),
        "s4": lambda: _closed_form_entry(
            "s4", 4, ("S^n",), 12.0, "sin(s)", "cos(s)", FiberSpec.sphere(3), (0.0, math.pi), 1.0
        ),
        "h3_window": lambda: _closed_form_entry(
            "h3_window", 3, ("H^n", "non-compact warped"), -6.0, "sinh(s)", "cosh(s)",
            FiberSpec.sphere(2), (0.2, 1.5), 0.8, compact=False,
        ),
        "s1xs2": lambda: _closed_form_entry(
            "s1xs2", 3, ("S1xS2", "constant-r warped"), 2.0, 1.0, "sin(s)", FiberSpec.sphere(2),
            (0.0, 2 * math.pi), 0.5, period=2 * math.pi,
        ),
        **{
            f"s1xs{n - 1}": _standard_product(n) for n in (4, 5)
        },
        "constant_r5_s2xs2": lambda: _closed_form_entry(
            "constant_r5_s2xs2", 5, ("constant-r warped",), 20.0, 1.0, "sin(sqrt(5)*s)",
            FiberSpec.sphere_product(1.0 / math.sqrt(5.0)), (0.0, 2 * math.pi / math.sqrt(5.0)),
            0.3, period=2 * math.pi / math.sqrt(5.0),
        ),
        "periodic_r3": lambda: _periodic_entry("periodic_r3", 3, 6.0, 0.9),
        "periodic_r5": lambda: _periodic_entry("periodic_r5", 5, 20.0, 0.9),
        "noncompact_r3_flat": lambda: _ode_entry(
            "noncompact_r3_flat", 3, ("non-compact warped",), 0.0, 0.5, (-1.5, 1.5), 0.8
        ),
        "noncompact_r3_negative": lambda: _ode_entry(
            "noncompact_r3_negative", 3, ("non-compact warped",), -6.0, 0.2, (-1.0, 1.0), 0.6
        ),
    }
    selected = list(builders) if names is None else list(names)
    unknown = sorted(set(selected) - set(builders))
    if unknown:
        raise PreconditionError(f"Unknown catalog entries {unknown}; known: {sorted(builders)}")
    entries = []
    for key in selected:
        entry = builders[key]()
        if certified:
            certify(entry)
        entries.append(entry)
    logger.info(f"Catalog built with {len(entries)} entries")
    return entries


def _standard_product(n: int) -> Any:
    """S¹(1/√(n-2)) × S^{n-1} with f = sin(√(n-2) s)."""
    omega = math.sqrt(n - 2)
    period = 2 * math.pi / omega

    def build() -> CatalogEntry:
        return _closed_form_entry(
            f"s1xs{n - 1}", n, ("constant-r warped",), float((n - 1) * (n - 2)), 1.0,
            f"sin(sqrt({n - 2})*s)", FiberSpec.sphere(n - 1), (0.0, period), 0.3, period=period,
        )

    return build
