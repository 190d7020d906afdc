"""Volume integrals over warped models and the integral identities built on them.

Warped models are integrated by the cohomogeneity-one reduction
``∫_M F = vol(E) ∫ F(s) ρ(s) ds`` with the integrand evaluated at a generic fiber
point; other charts use a tensor-product rule (Gauss-Legendre on intervals,
trapezoid on periodic coordinates). Every estimate carries the change under node
doubling as its error indicator.

Full divergences are integrated after moving the derivatives onto powers of f,
which is exact on closed models:
  ∫ f^p B_ij,^ij  =  ∫ ∇^i∇^j(f^p) B_ij
  ∫ f^p C_ijk,^ijk = -∫ C^ijk ∇_i∇_j∇_k(f^p)
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import sympy as sp
from loguru import logger
from numpy.polynomial.legendre import leggauss

from .config import DEFAULT_F_MIN, Tolerances
from .curvature import (
    bach,
    cotton_components,
    covariant_derivative,
    covariant_hessian,
    d_tensor,
    point_geometry,
)
from .errors import PreconditionError, RegularValueError
from .geometry.fibers import FiberKind
from .levelset import MIN_GRADIENT, level_parameters
from .statics import StaticModel

__all__ = [
    "RegionKind",
    "Region",
    "QuadratureRule",
    "IntegralEstimate",
    "IdentityCheck",
    "PointCache",
    "integrate",
    "is_closed",
    "power_hessian",
    "full_divergence_coefficient",
    "check_main_identity",
    "check_full_divergence_identity",
    "check_3d_identity",
    "check_helper_identity",
]

type Integrand = Callable[[np.ndarray], float]

_TOLERANCES = Tolerances()


class RegionKind(str, Enum):
    CLOSED = "closed"
    BETWEEN_LEVELS = "between_levels"


@dataclass(frozen=True)
class Region:
    """Where to integrate: the whole model, or M_{c1,c2} = {c1 < f < c2}."""

    kind: RegionKind
    intervals: tuple[tuple[float, float], ...] = ()
    levels: tuple[float, float] | None = None
    periodic: bool = False

    @classmethod
    def whole(cls, model: StaticModel) -> Region:
        """The full chart, with one period of a periodic warp."""
        warp = model.metric.warp
        if warp is None:
            return cls(RegionKind.CLOSED)
        lo, hi = warp.s_domain
        if warp.period is not None:
            return cls(RegionKind.CLOSED, ((lo, lo + warp.period),), periodic=True)
        return cls(RegionKind.CLOSED, ((lo, hi),))

    @classmethod
    def closed(cls, model: StaticModel) -> Region:
        if not is_closed(model):
            raise PreconditionError(
                f"{model.name} is not closed; its integral identities carry boundary terms"
            )
        return cls.whole(model)

    @classmethod
    def between_levels(cls, model: StaticModel, c1: float, c2: float) -> Region:
        if not c1 < c2:
            raise ValueError(f"Need c1 < c2, got ({c1}, {c2})")
        warp = model.metric.warp
        if warp is None:
            raise PreconditionError("Level regions are only supported on warped models")
        lo, hi = warp.s_domain
        cuts = sorted({lo, hi, *level_parameters(model, c1), *level_parameters(model, c2)})
        for s in cuts[1:-1]:
            grad = float(np.linalg.norm(model.f.gradient(warp.point(s))))
            if grad < MIN_GRADIENT:
                raise RegularValueError(model.f.value(warp.point(s)), grad)
        intervals = []
        for a, b in itertools.pairwise(cuts):
            middle = model.f.value(warp.point(0.5 * (a + b)))
            if c1 < middle < c2:
                intervals.append((a, b))
        if not intervals:
            raise PreconditionError(f"{model.name}: no region with {c1} < f < {c2}")
        return cls(RegionKind.BETWEEN_LEVELS, tuple(intervals), (c1, c2))

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "intervals": [list(i) for i in self.intervals],
            "levels": list(self.levels) if self.levels else None,
        }


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre order on intervals and node count on periodic coordinates."""

    order: int = 16
    periodic_nodes: int = 32
    fiber_order: int = 12

    def __post_init__(self) -> None:
        if self.order < 1 or self.periodic_nodes < 1 or self.fiber_order < 1:
            raise ValueError("Quadrature node counts must be positive")

    def doubled(self) -> QuadratureRule:
        return QuadratureRule(2 * self.order, 2 * self.periodic_nodes, 2 * self.fiber_order)

    def interval_nodes(self, lo: float, hi: float, periodic: bool = False) -> tuple[np.ndarray, np.ndarray]:
        if periodic:
            nodes = lo + (hi - lo) * np.arange(self.periodic_nodes) / self.periodic_nodes
            return nodes, np.full(self.periodic_nodes, (hi - lo) / self.periodic_nodes)
        return _scaled_gauss(self.order, lo, hi)


def _scaled_gauss(order: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    delta: float
    nodes: tuple[int, int]

    def converged(self, tolerance: float) -> bool:
        return self.delta <= tolerance * (1.0 + abs(self.value))


def _reduced(model: StaticModel, integrand: Integrand, region: Region, rule: QuadratureRule) -> tuple[float, int]:
    warp = model.metric.warp
    assert warp is not None
    total, count = 0.0, 0
    for lo, hi in region.intervals:
        nodes, weights = rule.interval_nodes(lo, hi, region.periodic)
        values = np.array([integrand(warp.point(s)) * warp.density(s) for s in nodes])
        total += float(np.sum(values * weights))
        count += len(nodes)
    return warp.fiber_volume * total, count


def _tensor_product(model: StaticModel, integrand: Integrand, rule: QuadratureRule) -> tuple[float, int]:
    chart = model.metric.chart
    axes = []
    for i, (lo, hi) in enumerate(chart.domains):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise PreconditionError(f"Cannot integrate over unbounded coordinate {chart.coordinates[i]}")
        if chart.is_periodic(i):
            axes.append(rule.interval_nodes(lo, lo + chart.periods[i], periodic=True))
        else:
            axes.append(_scaled_gauss(rule.fiber_order, lo, hi))
    total = 0.0
    count = 0
    for combo in itertools.product(*(range(len(nodes)) for nodes, _ in axes)):
        x = np.array([axes[k][0][j] for k, j in enumerate(combo)])
        weight = math.prod(axes[k][1][j] for k, j in enumerate(combo))
        total += weight * integrand(x) * model.metric.volume_density(x)
        count += 1
    return total, count


def _integrate_once(model: StaticModel, integrand: Integrand, region: Region, rule: QuadratureRule) -> tuple[float, int]:
    if model.metric.warp is not None and region.intervals:
        return _reduced(model, integrand, region, rule)
    if region.kind is not RegionKind.CLOSED:
        raise PreconditionError("Level regions need a warped model")
    return _tensor_product(model, integrand, rule)


def integrate(
    model: StaticModel,
    integrand: Integrand,
    region: Region | None = None,
    rule: QuadratureRule | None = None,
) -> IntegralEstimate:
    """∫ integrand dvol over the region, with the node-doubling change as error indicator."""
    region = region or Region.whole(model)
    rule = rule or QuadratureRule()
    coarse, n_coarse = _integrate_once(model, integrand, region, rule)
    fine, n_fine = _integrate_once(model, integrand, region, rule.doubled())
    estimate = IntegralEstimate(fine, abs(fine - coarse), (n_coarse, n_fine))
    logger.debug(
        f"Integral over {model.name} ({region.kind.value}): {fine:.12g} ± {estimate.delta:.2e}"
    )
    return estimate


def power_hessian(f_value: float, df: np.ndarray, hess: np.ndarray, p: float) -> np.ndarray:
    """∇_i∇_j(f^p) = p f^{p-1} f_ij + p(p-1) f^{p-2} f_i f_j."""
    return p * f_value ** (p - 1) * hess + p * (p - 1) * f_value ** (p - 2) * np.outer(df, df)


def full_divergence_coefficient(n: int | sp.Symbol, p: int | sp.Symbol) -> sp.Expr:
    """Coefficient -p(n-4)/(2(n-1)(n-2)) of ∫ f^{p-2} D·C."""
    n, p = sp.sympify(n), sp.sympify(p)
    return sp.simplify(-p * (n - 4) / (2 * (n - 1) * (n - 2)))


@dataclass
class IdentityCheck:
    """One integral identity: both sides, their indicators and the relative residual."""

    identity: str
    model: str
    p: int
    region: Region
    lhs: IntegralEstimate
    rhs: IntegralEstimate
    diagnostics: dict[str, float] = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return abs(self.lhs.value - self.rhs.value) / (1.0 + abs(self.rhs.value))

    def converged(self, tolerance: float) -> bool:
        return self.lhs.converged(tolerance) and self.rhs.converged(tolerance)

    def passed(self, tolerance: float) -> bool:
        return self.residual <= tolerance

    def to_record(
        self,
        tolerance: float = _TOLERANCES.integral_identity,
        stability: float = _TOLERANCES.quadrature_stability,
    ) -> dict[str, Any]:
        return {
            "identity": self.identity,
            "model": self.model,
            "p": self.p,
            "region": self.region.to_record(),
            "lhs": self.lhs.value,
            "rhs": self.rhs.value,
            "residual": self.residual,
            "node_counts": list(self.lhs.nodes),
            "converged": self.converged(stability),
            "passed": self.passed(tolerance),
            "diagnostics": self.diagnostics,
        }


class PointCache:
    """Memoized per-point quantities shared by the integrands of one check."""

    def __init__(self, model: StaticModel) -> None:
        self.model = model
        self._cache: dict[tuple[float, ...], dict[str, Any]] = {}

    def __call__(self, x: np.ndarray) -> dict[str, Any]:
        key = tuple(np.round(np.asarray(x, float), 15))
        if key not in self._cache:
            metric, f = self.model.metric, self.model.f
            geo = point_geometry(metric, x)
            df = f.gradient(x)
            grad_up = geo.g_inv @ df
            b = bach(metric, x).components
            d = d_tensor(metric, f, x)
            hess = covariant_hessian(metric, f, x)
            self._cache[key] = {
                "f": f.value(x),
                "df": df,
                "hess": hess,
                "g_inv": geo.g_inv,
                "bach": b,
                "b_grad": float(grad_up @ b @ grad_up),
                "b_hess": float(np.einsum("ij,ik,jl,kl->", b, geo.g_inv, geo.g_inv, hess)),
                "d_norm2": d.norm_squared(),
                "d": d,
            }
        return self._cache[key]


def is_closed(model: StaticModel) -> bool:
    """True when the chart covers a closed manifold: every coordinate periodic, a periodic
    warp, or warps that close up at both ends of the s-interval."""
    warp = model.metric.warp
    if warp is None:
        chart = model.metric.chart
        return all(chart.is_periodic(i) for i in range(chart.dimension))
    if any(block.fiber.kind is FiberKind.HYPERBOLIC for block in warp.blocks):
        return False
    if warp.period is not None:
        return True
    lo, hi = warp.s_domain
    return all(abs(p(lo)) < 1e-8 and abs(p(hi)) < 1e-8 for p in warp.profiles.values())


def _check_power(p: int, need_even: bool = False) -> None:
    if p < 2:
        raise PreconditionError(f"The integral identities need p >= 2, got {p}")
    if need_even and p % 2:
        raise PreconditionError(f"Closed-model identities are checked for even p only, got {p}")


def check_main_identity(
    model: StaticModel,
    c1: float,
    c2: float,
    p: int,
    rule: QuadratureRule | None = None,
    f_min: float = DEFAULT_F_MIN,
    point_data: PointCache | None = None,
) -> IdentityCheck:
    """∫ f^p B_jk f^j f^k against (1/(2(n-1))) ∫ f^{p-2} |D|² over M_{c1,c2}.

    Odd p is only checked where f > f_min on the region.
    """
    _check_power(p)
    if p % 2 and c1 < f_min:
        raise PreconditionError(f"Odd p = {p} needs f > f_min on the region, got c1 = {c1}")
    n = model.dimension
    region = Region.between_levels(model, c1, c2)
    data = point_data or PointCache(model)
    lhs = integrate(model, lambda x: data(x)["f"] ** p * data(x)["b_grad"], region, rule)
    rhs = integrate(
        model, lambda x: data(x)["f"] ** (p - 2) * data(x)["d_norm2"] / (2.0 * (n - 1)), region, rule
    )
    hessian_form = integrate(model, lambda x: data(x)["f"] ** p * data(x)["b_hess"], region, rule)
    check = IdentityCheck(
        "bach_gradient_integral", model.name, p, region, lhs, rhs,
        {"hessian_contracted_lhs": hessian_form.value},
    )
    logger.info(
        f"{model.name} p={p} on ({c1:g}, {c2:g}): lhs={lhs.value:.10g} rhs={rhs.value:.10g} "
        f"residual={check.residual:.2e}"
    )
    return check


def check_full_divergence_identity(
    model: StaticModel, p: int, rule: QuadratureRule | None = None
) -> IdentityCheck:
    """∫ f^p B_ij,^ij against -(p(n-4)/(2(n-1)(n-2))) ∫ f^{p-2} D·C on a closed model."""
    _check_power(p, need_even=True)
    n = model.dimension
    region = Region.closed(model)
    data = PointCache(model)
    coefficient = float(full_divergence_coefficient(n, p))

    def lhs_integrand(x: np.ndarray) -> float:
        d = data(x)
        hp = power_hessian(d["f"], d["df"], d["hess"], p)
        return float(np.einsum("ij,ik,jl,kl->", hp, d["g_inv"], d["g_inv"], d["bach"]))

    def rhs_integrand(x: np.ndarray) -> float:
        d = data(x)
        c = cotton_components(model.metric, x)
        d_up = d["d"].raised().components
        return coefficient * d["f"] ** (p - 2) * float(np.sum(d_up * c))

    lhs = integrate(model, lhs_integrand, region, rule)
    rhs = integrate(model, rhs_integrand, region, rule)
    return IdentityCheck(
        "bach_full_divergence", model.name, p, region, lhs, rhs, {"coefficient": coefficient}
    )


def _third_power_derivative(model: StaticModel, x: np.ndarray, p: int) -> np.ndarray:
    """∇_i ∇_j ∇_k (f^p)."""
    metric, f = model.metric, model.f

    def hessian_of_power(y: np.ndarray) -> np.ndarray:
        return power_hessian(f.value(y), f.gradient(y), covariant_hessian(metric, f, y), p)

    return covariant_derivative(metric, hessian_of_power, x)


def check_3d_identity(
    model: StaticModel, p: int, rule: QuadratureRule | None = None
) -> IdentityCheck:
    """∫ f^p C_ijk,^ijk against -(p/4) ∫ f^p |C|² on a closed 3-manifold."""
    if model.dimension != 3:
        raise PreconditionError(f"The Cotton full-divergence identity is 3-dimensional, n = {model.dimension}")
    _check_power(p)
    region = Region.closed(model)

    def lhs_integrand(x: np.ndarray) -> float:
        c = cotton_components(model.metric, x)
        g_inv = point_geometry(model.metric, x).g_inv
        c_up = np.einsum("ia,jb,kc,abc->ijk", g_inv, g_inv, g_inv, c)
        return -float(np.sum(c_up * _third_power_derivative(model, x, p)))

    def rhs_integrand(x: np.ndarray) -> float:
        c = cotton_components(model.metric, x)
        g_inv = point_geometry(model.metric, x).g_inv
        c_up = np.einsum("ia,jb,kc,abc->ijk", g_inv, g_inv, g_inv, c)
        return -p / 4.0 * model.f.value(x) ** p * float(np.sum(c_up * c))

    lhs = integrate(model, lhs_integrand, region, rule)
    rhs = integrate(model, rhs_integrand, region, rule)
    return IdentityCheck(
        "cotton_full_divergence_3d", model.name, p, region, lhs, rhs,
        {"coefficient": float(full_divergence_coefficient(3, p))},
    )


def check_helper_identity(
    model: StaticModel,
    p: int,
    rule: QuadratureRule | None = None,
    levels: Sequence[float] | None = None,
) -> IdentityCheck:
    """∫ f^p B_ij f^i f^j = ∫ f^{p+2} B_ij,^ij/((p+1)(p+2)) - ∫ f^{p+1} B_ij f^{i,j}/(p+1).

    Only closed models have no boundary terms; ``levels`` is accepted for
    diagnostics on level regions, where the boundary flux is reported instead.
    """
    _check_power(p)
    region = Region.closed(model) if levels is None else Region.between_levels(model, *levels)
    data = PointCache(model)

    def rhs_integrand(x: np.ndarray) -> float:
        d = data(x)
        hp = power_hessian(d["f"], d["df"], d["hess"], p + 2)
        divergence_term = float(np.einsum("ij,ik,jl,kl->", hp, d["g_inv"], d["g_inv"], d["bach"]))
        return divergence_term / ((p + 1) * (p + 2)) - d["f"] ** (p + 1) * d["b_hess"] / (p + 1)

    lhs = integrate(model, lambda x: data(x)["f"] ** p * data(x)["b_grad"], region, rule)
    rhs = integrate(model, rhs_integrand, region, rule)
    return IdentityCheck("bach_helper_integral", model.name, p, region, lhs, rhs)
