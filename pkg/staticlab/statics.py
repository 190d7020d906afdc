"""Static, vacuum static, critical point and unified equations.

The unified equation ``f S = ∇²f + Φ g`` is the single source of truth; the
other three are classifications layered on top through their Φ. Models are
bundled as StaticModel, and manufactured models come from reducing the
trace-free part of the unified equation to ODEs on warped products.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import sympy as sp
from loguru import logger

from .config import DEFAULT_F_MIN, Tolerances
from .curvature import (
    PointGeometry,
    Symmetry,
    TensorValue,
    bach,
    cotton_components,
    covariant_divergence,
    covariant_hessian,
    d_tensor,
    point_geometry,
)
from .errors import PreconditionError
from .geometry.fibers import FiberSpec
from .geometry.metric import MetricField, ScalarField, make_scalar_field
from .geometry.profiles import OdeSystem, Trajectory
from .geometry.warped import WarpLike, as_profile, make_doubly_warped_product, make_warped_product

__all__ = [
    "ModelKind",
    "StaticModel",
    "PhiPsi",
    "laplacian",
    "static_residual",
    "vacuum_static_residual",
    "cpe_residual",
    "scalar_curvature_gradient",
    "unified_residual",
    "trace_identity_residual",
    "phi_psi",
    "d_closed_form",
    "bach_rewrite_residual",
    "bach_gradient_contraction_residual",
    "static_scalar_relation_residual",
    "unified_sensitivity",
    "manufacture_static_warped",
    "manufacture_static_doubly_warped",
    "trajectory_potential",
]

_TOLERANCES = Tolerances()


class ModelKind(str, Enum):
    VACUUM_STATIC = "vacuum_static"
    STATIC = "static"
    CPE = "cpe"
    UNIFIED = "unified"


@dataclass
class StaticModel:
    """A metric with a potential f and the scalar Φ of the unified equation.

    Φ is given by the kind: the CPE form for ``cpe``, the trace identity
    ``(f tr S - Δf)/n`` otherwise, unless an explicit ``phi`` field is stored.
    """

    name: str
    metric: MetricField
    f: ScalarField
    kind: ModelKind = ModelKind.UNIFIED
    phi: ScalarField | None = None
    definition: dict[str, Any] | None = None
    trajectory: Trajectory | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.metric.dimension

    @property
    def constant_potential(self) -> bool:
        return self.f.expr is not None and not self.f.expr.free_symbols and not self.f.bindings

    def phi_value(self, x: np.ndarray) -> float:
        if self.phi is not None:
            return self.phi.value(x)
        geo = point_geometry(self.metric, x)
        n = geo.dimension
        if self.kind is ModelKind.CPE:
            r = geo.scalar
            return r * self.f.value(x) / (2.0 * (n - 1)) - r / (n * (n - 1))
        hess = covariant_hessian(self.metric, self.f, x)
        trace_s = float(np.einsum("ij,ij->", geo.g_inv, geo.schouten))
        lap = float(np.einsum("ij,ij->", geo.g_inv, hess))
        return (self.f.value(x) * trace_s - lap) / n

    def perturbed(self, delta: sp.Expr, name: str) -> StaticModel:
        """The same metric with f + delta, classified as a plain unified model."""
        return StaticModel(name, self.metric, self.f.perturbed(delta, f"{self.f.name}~"))

    def require_regular(self, x: np.ndarray, f_min: float = DEFAULT_F_MIN) -> float:
        value = self.f.value(x)
        if abs(value) < f_min:
            raise PreconditionError(
                f"|f| = {abs(value):.3e} < f_min = {f_min:g} at {tuple(np.round(x, 6))}"
            )
        return value

    def sample_values(self, points: Iterable[np.ndarray]) -> list[float]:
        return [self.f.value(p) for p in points]

    def sample_points(self, count: int, seed: int = 0, margin: float = 0.1) -> np.ndarray:
        """Seeded evaluation points; on warped models s keeps a fraction ``margin`` of its
        interval away from the ends and the fiber stays clear of polar angles."""
        rng = np.random.default_rng(seed)
        warp = self.metric.warp
        if warp is None:
            return self.metric.chart.sample_points(count, rng, margin=0.2)
        lo, hi = warp.s_domain
        if warp.period is not None:
            s_values = rng.uniform(lo, lo + warp.period, count)
        else:
            pad = margin * (hi - lo)
            s_values = rng.uniform(lo + pad, hi - pad, count)
        return np.column_stack([s_values, warp.fiber_points(count, rng)])

    def __repr__(self) -> str:
        return f"StaticModel({self.name}, kind={self.kind.value}, n={self.dimension})"


def laplacian(metric: MetricField, f: ScalarField, x: np.ndarray) -> float:
    g_inv = np.linalg.inv(metric.components(x))
    return float(np.einsum("ij,ij->", g_inv, covariant_hessian(metric, f, x)))


def _symmetric(name: str, components: np.ndarray, geo: PointGeometry) -> TensorValue:
    return TensorValue(name, components, ("d", "d"), geo.g, frozenset({Symmetry.SYMMETRIC}))


def static_residual(metric: MetricField, f: ScalarField, x: np.ndarray) -> TensorValue:
    """Trace-free part of ∇²f - f Ric."""
    geo = point_geometry(metric, x)
    t = covariant_hessian(metric, f, x) - f.value(x) * geo.ricci
    trace = float(np.einsum("ij,ij->", geo.g_inv, t))
    return _symmetric("static_residual", t - trace * geo.g / geo.dimension, geo)


def vacuum_static_residual(metric: MetricField, f: ScalarField, x: np.ndarray) -> TensorValue:
    """-(Δf) g + ∇²f - f Ric, the adjoint of the linearized scalar curvature.

    Taking its trace gives Δf = -R f/(n-1); substituting back, the kernel is
    exactly ∇²f = f (Ric - R g/(n-1)). The two forms vanish together, though
    their residuals differ off the solution set.
    """
    geo = point_geometry(metric, x)
    hess = covariant_hessian(metric, f, x)
    lap = float(np.einsum("ij,ij->", geo.g_inv, hess))
    return _symmetric("vacuum_static_residual", -lap * geo.g + hess - f.value(x) * geo.ricci, geo)


def scalar_curvature_gradient(metric: MetricField, x: np.ndarray) -> np.ndarray:
    return metric.engine.gradient(
        lambda y: np.asarray(point_geometry(metric, y).scalar), np.asarray(x, float),
        metric.engine.tensor_step,
    )


def cpe_residual(
    metric: MetricField,
    f: ScalarField,
    x: np.ndarray,
    constancy_tolerance: float = _TOLERANCES.second_order,
) -> TensorValue:
    """∇²f - (Ric - R g/(n-1)) f - R g/(n(n-1)); R must be constant."""
    drift = float(np.max(np.abs(scalar_curvature_gradient(metric, x))))
    if drift > constancy_tolerance:
        raise PreconditionError(
            f"Scalar curvature of {metric.name} is not constant: |dR| = {drift:.3e}"
        )
    geo = point_geometry(metric, x)
    n, r = geo.dimension, geo.scalar
    residual = (
        covariant_hessian(metric, f, x)
        - (geo.ricci - r * geo.g / (n - 1)) * f.value(x)
        - r * geo.g / (n * (n - 1))
    )
    return _symmetric("cpe_residual", residual, geo)


def unified_residual(model: StaticModel, x: np.ndarray) -> TensorValue:
    """f S - ∇²f - Φ g."""
    geo = point_geometry(model.metric, x)
    residual = (
        model.f.value(x) * geo.schouten
        - covariant_hessian(model.metric, model.f, x)
        - model.phi_value(x) * geo.g
    )
    return _symmetric("unified_residual", residual, geo)


def trace_identity_residual(model: StaticModel, x: np.ndarray) -> float:
    """|nΦ - (f tr S - Δf)|."""
    geo = point_geometry(model.metric, x)
    n = geo.dimension
    trace_s = float(np.einsum("ij,ij->", geo.g_inv, geo.schouten))
    return abs(n * model.phi_value(x) - (model.f.value(x) * trace_s - laplacian(model.metric, model.f, x)))


@dataclass(frozen=True)
class PhiPsi:
    phi: float
    psi: np.ndarray
    psi_hessian_form: np.ndarray

    @property
    def agreement(self) -> float:
        return float(np.max(np.abs(self.psi - self.psi_hessian_form)))


def phi_psi(model: StaticModel, x: np.ndarray) -> PhiPsi:
    """Φ and Ψ_j.

    ``psi`` is the general form -(n-2) f Φ_j + f_{j,l} f^l + nΦ f_j with Φ_j from
    differencing Φ; ``psi_hessian_form`` is f_{j,l} f^l - Δf f_j, which equals
    it on static and CPE models.
    """
    x = np.asarray(x, dtype=float)
    metric, f = model.metric, model.f
    n = metric.dimension
    g_inv = np.linalg.inv(metric.components(x))
    hess = covariant_hessian(metric, f, x)
    df = f.gradient(x)
    phi = model.phi_value(x)
    dphi = metric.engine.gradient(
        lambda y: np.asarray(model.phi_value(y)), x, metric.engine.tensor_step
    )
    hess_grad = hess @ (g_inv @ df)
    psi = -(n - 2) * f.value(x) * dphi + hess_grad + n * phi * df
    lap = float(np.einsum("ij,ij->", g_inv, hess))
    return PhiPsi(phi, psi, hess_grad - lap * df)


def _require_unified(model: StaticModel, x: np.ndarray, tolerance: float) -> None:
    residual = unified_residual(model, x).max_abs()
    if residual > tolerance:
        raise PreconditionError(
            f"{model.name} does not satisfy the unified equation at {tuple(np.round(x, 6))}: "
            f"residual {residual:.3e} > {tolerance:g}"
        )


def d_closed_form(
    model: StaticModel, x: np.ndarray, tolerance: float = _TOLERANCES.unified_residual
) -> tuple[TensorValue, float]:
    """D from f, its Hessian and Ψ, and its max difference from f²C - f W(·,·,·,∇f).

    D_ijk = ((n-1)(f_ik f_j - f_jk f_i) + Ψ_j g_ik - Ψ_i g_jk) / (n-2)
    """
    x = np.asarray(x, dtype=float)
    _require_unified(model, x, tolerance)
    metric, f = model.metric, model.f
    n = metric.dimension
    g = metric.components(x)
    hess = covariant_hessian(metric, f, x)
    df = f.gradient(x)
    psi = phi_psi(model, x).psi
    closed = (
        (n - 1) * (np.einsum("ik,j->ijk", hess, df) - np.einsum("jk,i->ijk", hess, df))
        + np.einsum("j,ik->ijk", psi, g)
        - np.einsum("i,jk->ijk", psi, g)
    ) / (n - 2)
    value = TensorValue(
        "d_closed_form", closed, ("d",) * 3, g, frozenset({Symmetry.ANTISYMMETRIC, Symmetry.TRACE_FREE})
    )
    pipeline = d_tensor(metric, f, x)
    return value, float(np.max(np.abs(closed - pipeline.components)))


def bach_rewrite_residual(
    model: StaticModel, x: np.ndarray, f_min: float = DEFAULT_F_MIN
) -> float:
    """max |(n-2)B - RHS| with
    RHS_jk = -∇^i(D_ijk/f²) + ((n-3)/(n-2)) C_lkj f^l/f + W_ijkl f^i f^l/f².
    """
    x = np.asarray(x, dtype=float)
    fx = model.require_regular(x, f_min)
    metric, f = model.metric, model.f
    n = metric.dimension
    geo = point_geometry(metric, x)
    grad_up = geo.g_inv @ f.gradient(x)

    def scaled_d(y: np.ndarray) -> np.ndarray:
        return d_tensor(metric, f, y).components / f.value(y) ** 2

    div_d = covariant_divergence(metric, scaled_d, x, slot=0)
    c = cotton_components(metric, x)
    rhs = (
        -div_d
        + (n - 3) / (n - 2) * np.einsum("lkj,l->jk", c, grad_up) / fx
        + np.einsum("ijkl,i,l->jk", geo.weyl(), grad_up, grad_up) / fx**2
    )
    lhs = (n - 2) * bach(metric, x).components
    return float(np.max(np.abs(lhs - rhs)))


def bach_gradient_contraction_residual(
    model: StaticModel, x: np.ndarray, f_min: float = DEFAULT_F_MIN
) -> tuple[float, float]:
    """(B_jk f^j f^k, residual of B_jk f^j f^k = -(∇^i D_ijk) f^j f^k / ((n-2) f²))."""
    x = np.asarray(x, dtype=float)
    fx = model.require_regular(x, f_min)
    metric, f = model.metric, model.f
    n = metric.dimension
    grad_up = np.linalg.inv(metric.components(x)) @ f.gradient(x)
    div_d = covariant_divergence(metric, lambda y: d_tensor(metric, f, y).components, x, slot=0)
    lhs = float(grad_up @ bach(metric, x).components @ grad_up)
    rhs = -float(grad_up @ div_d @ grad_up) / ((n - 2) * fx**2)
    return lhs, abs(lhs - rhs)


def static_scalar_relation_residual(model: StaticModel, x: np.ndarray) -> float:
    """max |(n/2 - 1) f dR - R df - (n-1) dΔf|, valid on static models."""
    x = np.asarray(x, dtype=float)
    metric, f = model.metric, model.f
    n = metric.dimension
    step = metric.engine.tensor_step
    d_r = scalar_curvature_gradient(metric, x)
    d_lap = metric.engine.gradient(lambda y: np.asarray(laplacian(metric, f, y)), x, step)
    r = point_geometry(metric, x).scalar
    residual = (n / 2 - 1) * f.value(x) * d_r - r * f.gradient(x) - (n - 1) * d_lap
    return float(np.max(np.abs(residual)))


def unified_sensitivity(
    model: StaticModel,
    points: Sequence[np.ndarray],
    bump: sp.Expr,
    epsilons: Sequence[float] = (1e-3, 1e-4),
) -> list[float]:
    """Max unified residual over ``points`` for f + eps·bump, one value per eps."""
    maxima = []
    for eps in epsilons:
        perturbed = model.perturbed(eps * bump, f"{model.name}+{eps:g}bump")
        maxima.append(max(unified_residual(perturbed, p).max_abs() for p in points))
        logger.debug(f"Perturbation {eps:g}: max unified residual {maxima[-1]:.3e}")
    return maxima


def trajectory_potential(metric: MetricField, trajectory: Trajectory, component: str = "f") -> ScalarField:
    profile = trajectory.profile(component)
    s = metric.chart.symbols[0]
    return make_scalar_field(
        metric.chart, sp.Function(profile.name)(s), {profile.name: (profile, 0)}, name=profile.name
    )


def _sample_abs_max(trajectory: Trajectory, component: int, count: int = 257) -> float:
    _, states = trajectory.sample(count)
    return float(np.max(np.abs(states[:, component])))


def manufacture_static_warped(
    r: WarpLike,
    fiber: FiberSpec,
    n: int,
    f0: float,
    f0_prime: float,
    s_interval: tuple[float, float],
    s0: float | None = None,
    name: str = "manufactured_warped",
    f_min: float = DEFAULT_F_MIN,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> StaticModel:
    """Solve the trace-free unified equation for f = f(s) on ds² + r² g_E.

    With m = n - 1 and λ the fiber Einstein constant the reduction reads
    f'' = (r'/r) f' + (-(m-1) r''/r - λ/r² + (m-1) r'²/r²) f.
    """
    if f0 == 0 and f0_prime == 0:
        raise PreconditionError("Initial data f0 = f0' = 0 gives f ≡ 0")
    metric = make_warped_product(r, fiber, n, s_domain=s_interval, name=name)
    profile = metric.warp.blocks[0].profile
    s = OdeSystem.variable
    w = sp.Function(profile.name)(s)
    w1, w2 = w.diff(s), w.diff(s, 2)
    m, lam = n - 1, sp.Float(fiber.einstein_constant)
    f_sym, fp_sym = sp.symbols("f fp", real=True)
    coefficient = -(m - 1) * w2 / w - lam / w**2 + (m - 1) * w1**2 / w**2
    system = OdeSystem(
        ("f", "fp"), (fp_sym, (w1 / w) * fp_sym + coefficient * f_sym), {profile.name: profile},
        name=f"{name}:f",
    )
    start = s_interval[0] if s0 is None else s0
    trajectory = system.solve(start, (f0, f0_prime), s_interval, rtol=rtol, atol=atol)
    model = StaticModel(
        name, metric, trajectory_potential(metric, trajectory), ModelKind.STATIC, trajectory=trajectory
    )
    if _sample_abs_max(trajectory, 0) < f_min:
        message = f"{name}: |f| < f_min = {f_min:g} on the whole interval; rewrite checks skipped"
        logger.warning(message)
        model.notes.append(message)
    logger.info(f"Manufactured {name} over {fiber.label} (n={n})")
    return model


def _event(fn: Callable[[float, np.ndarray], float]) -> Callable[[float, np.ndarray], float]:
    fn.terminal = True  # type: ignore[attr-defined]
    return fn


def manufacture_static_doubly_warped(
    a: WarpLike,
    first: FiberSpec,
    second: FiberSpec,
    b0: float,
    b0_prime: float,
    f0: float,
    f0_prime: float,
    s_interval: tuple[float, float],
    s0: float | None = None,
    name: str = "manufactured_doubly_warped",
    f_min: float = DEFAULT_F_MIN,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> StaticModel:
    """Static model on ds² + a² g_E1 + b² g_E2 with f = f(s) and a prescribed.

    The two trace-free conditions of the unified equation become second order
    ODEs for b and f. Integration stops where |f| < f_min or b <= 0; the model
    lives on the span actually covered.
    """
    p, q = first.dimension, second.dimension
    a_profile = as_profile("a", a)
    s = OdeSystem.variable
    A = sp.Function(a_profile.name)(s)
    a1, a2 = A.diff(s), A.diff(s, 2)
    b, bp, f, fp = sp.symbols("b bp f fp", real=True)
    lam1, lam2 = sp.Float(first.einstein_constant), sp.Float(second.einstein_constant)
    ric_first = (lam1 - (p - 1) * a1**2) / A**2 - a2 / A - q * a1 * bp / (A * b)
    b_ratio = (
        (a1 / A - bp / b) * fp / f
        - (lam1 - (p - 1) * a1**2) / A**2
        + a2 / A
        + (q - p) * a1 * bp / (A * b)
        + (lam2 - (q - 1) * bp**2) / b**2
    )
    ric_ss = -p * a2 / A - q * b_ratio
    system = OdeSystem(
        ("b", "bp", "f", "fp"),
        (bp, b * b_ratio, fp, (a1 / A) * fp + f * (ric_ss - ric_first)),
        {a_profile.name: a_profile},
        name=f"{name}:(b,f)",
    )
    events = (
        _event(lambda _s, y: abs(y[2]) - f_min),
        _event(lambda _s, y: y[0]),
    )
    start = s_interval[0] if s0 is None else s0
    trajectory = system.solve(
        start, (b0, b0_prime, f0, f0_prime), s_interval, rtol=rtol, atol=atol, events=events
    )
    span = trajectory.span
    if trajectory.termination is not None:
        message = f"{name}: degenerate model, {trajectory.termination}; using span {span}"
        logger.warning(message)
    metric = make_doubly_warped_product(
        a_profile, trajectory.profile("b"), first, second, s_domain=span, name=name
    )
    model = StaticModel(
        name, metric, trajectory_potential(metric, trajectory), ModelKind.STATIC, trajectory=trajectory
    )
    if trajectory.termination is not None:
        model.notes.append(trajectory.termination)
    logger.info(
        f"Manufactured {name} over {first.label} x {second.label} (n={1 + p + q}), span {span}"
    )
    return model
