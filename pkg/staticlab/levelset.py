"""Level-set geometry of the potential on warped models.

On the warped constructions f depends on s only, so a regular level set
``Σ = f^{-1}(c)`` is the coordinate slice ``s = s_c``. Extrinsic quantities are
computed from an orthonormal frame ``(e_1, ..., e_{n-1}, e_n = ∇f/|∇f|)`` built
by Gram-Schmidt in g; the intrinsic scalar curvature of Σ comes from the
restricted slice metric, independently of the ambient curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from .config import DEFAULT_F_MIN, Tolerances
from .curvature import bach, covariant_hessian, d_tensor, point_geometry, ricci_scalar_schouten
from .errors import PreconditionError, RegularValueError
from .geometry.warped import WarpStructure
from .statics import StaticModel, unified_residual

__all__ = [
    "SliceData",
    "LevelsetIdentity",
    "ConstancyReport",
    "WeylNormalResult",
    "EinsteinSliceResult",
    "level_parameters",
    "slice_point_data",
    "slice_geometry",
    "levelset_identity_residual",
    "constancy_checks",
    "gauss_codazzi_residuals",
    "weyl_normal_check",
    "einstein_slice_check",
    "boundary_flux_residual",
]

MIN_GRADIENT = 1e-6
LEVEL_SCAN = 801
SLICE_SAMPLES = 32
CODAZZI_STEP = 1e-4

_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SliceData:
    """Level-set geometry at one point of Σ."""

    level: float
    s: float
    point: np.ndarray
    W: float
    h: np.ndarray
    H: float
    A_squared: float
    grad_sigma_W_squared: float
    grad_n_W: float
    R: float
    R_nn: float
    R_sigma: float
    laplacian_f: float
    frame: np.ndarray = field(repr=False)
    ricci: np.ndarray = field(repr=False)

    @property
    def umbilic_defect(self) -> float:
        """|A - (H/(n-1)) g^Σ|²."""
        m = self.h.shape[0]
        return float(np.sum((self.h - self.H / m * np.eye(m)) ** 2))

    @property
    def normal(self) -> np.ndarray:
        return self.frame[-1]

    def to_row(self) -> dict[str, Any]:
        return {
            "c": self.level,
            "s": self.s,
            "W": self.W,
            "H": self.H,
            "A2": self.A_squared,
            "R_sigma": self.R_sigma,
            "R_nn": self.R_nn,
            "grad_sigma_W2": self.grad_sigma_W_squared,
        }


def _warp(model: StaticModel) -> WarpStructure:
    warp = model.metric.warp
    if warp is None:
        raise PreconditionError(
            f"{model.name}: level sets are only extracted on warped models"
        )
    if model.constant_potential:
        raise PreconditionError(f"{model.name}: f is constant, it has no regular level sets")
    return warp


def level_parameters(model: StaticModel, c: float) -> list[float]:
    """All s with f(s) = c on the s-domain, by bracketing and brentq."""
    warp = _warp(model)
    lo, hi = warp.s_domain
    pad = 1e-6 * (hi - lo)
    grid = np.linspace(lo + pad, hi - pad, LEVEL_SCAN)

    def shifted(s: float) -> float:
        return model.f.value(warp.point(s)) - c

    values = np.array([shifted(s) for s in grid])
    roots: list[float] = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:], strict=True):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(brentq(shifted, a, b, xtol=1e-14, rtol=1e-15)))
    return roots


def _orthonormal_frame(g: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Rows e_1..e_n (contravariant components), orthonormal in g, with e_n = normal."""
    n = g.shape[0]
    vectors = [normal]
    for k in range(n):
        candidate = np.eye(n)[k]
        for v in vectors:
            candidate = candidate - (v @ g @ candidate) * v
        norm = np.sqrt(candidate @ g @ candidate)
        if norm > 1e-8:
            vectors.append(candidate / norm)
        if len(vectors) == n:
            break
    return np.array(vectors[1:] + vectors[:1])


def slice_point_data(model: StaticModel, x: np.ndarray, level: float | None = None) -> SliceData:
    """SliceData at a point x of the level set through x."""
    warp = _warp(model)
    x = np.asarray(x, dtype=float)
    metric, f = model.metric, model.f
    geo = point_geometry(metric, x)
    df = f.gradient(x)
    grad_up = geo.g_inv @ df
    w = float(df @ grad_up)
    if np.sqrt(w) < MIN_GRADIENT:
        raise RegularValueError(f.value(x) if level is None else level, float(np.sqrt(w)))
    tangential = np.abs(np.delete(df, warp.s_index))
    if np.max(tangential) > 1e-10 * max(1.0, np.sqrt(w)):
        raise PreconditionError(f"{model.name}: f is not a function of s alone at {tuple(x)}")
    frame = _orthonormal_frame(geo.g, grad_up / np.sqrt(w))
    hess = covariant_hessian(metric, f, x)
    hess_frame = frame @ hess @ frame.T
    h = -hess_frame[:-1, :-1] / np.sqrt(w)
    dw = 2.0 * hess @ grad_up
    dw_frame = frame @ dw
    ric_frame = frame @ geo.ricci @ frame.T
    slice_metric = metric.restrict(warp.s_index, float(x[warp.s_index]))
    _, r_sigma, _ = ricci_scalar_schouten(slice_metric, np.delete(x, warp.s_index))
    return SliceData(
        level=f.value(x) if level is None else level,
        s=float(x[warp.s_index]),
        point=x,
        W=w,
        h=h,
        H=float(np.trace(h)),
        A_squared=float(np.sum(h**2)),
        grad_sigma_W_squared=float(np.sum(dw_frame[:-1] ** 2)),
        grad_n_W=float(dw_frame[-1]),
        R=geo.scalar,
        R_nn=float(ric_frame[-1, -1]),
        R_sigma=float(r_sigma),
        laplacian_f=float(np.einsum("ij,ij->", geo.g_inv, hess)),
        frame=frame,
        ricci=ric_frame,
    )


def _resolve_level(model: StaticModel, c: float, s_hint: float | None) -> float:
    roots = level_parameters(model, c)
    if not roots:
        raise RegularValueError(c, float("nan"), f"level not attained on {model.name}")
    if s_hint is None:
        return roots[0]
    return min(roots, key=lambda s: abs(s - s_hint))


def slice_geometry(model: StaticModel, c: float, s_hint: float | None = None) -> SliceData:
    """SliceData for Σ = f^{-1}(c) at the reference fiber point."""
    warp = _warp(model)
    s_c = _resolve_level(model, c, s_hint)
    data = slice_point_data(model, warp.point(s_c), level=c)
    logger.debug(f"Slice c={c:g} of {model.name} at s={s_c:.10g}: H={data.H:.6g}, W={data.W:.6g}")
    return data


def _slice_points(
    model: StaticModel, c: float, count: int, seed: int, s_hint: float | None
) -> tuple[float, np.ndarray]:
    warp = _warp(model)
    s_c = _resolve_level(model, c, s_hint)
    rng = np.random.default_rng(seed)
    fibers = warp.fiber_points(count, rng)
    return s_c, np.array([warp.point(s_c, y) for y in fibers])


def _require_unified_on(model: StaticModel, points: np.ndarray, tolerance: float) -> None:
    worst = max(unified_residual(model, p).max_abs() for p in points)
    if worst > tolerance:
        raise PreconditionError(
            f"{model.name}: unified residual {worst:.3e} exceeds {tolerance:g} on the slice"
        )


@dataclass(frozen=True)
class LevelsetIdentity:
    level: float
    lhs: float
    rhs: float
    residual: float
    umbilic_term: float
    gradient_term: float


def levelset_identity_residual(
    model: StaticModel,
    c: float,
    samples: int = 4,
    seed: int = 0,
    s_hint: float | None = None,
    tolerance: float = _TOLERANCES.unified_residual,
) -> LevelsetIdentity:
    """|D|² against 2((n-1)²/(n-2)²) W² |A - H g^Σ/(n-1)|² + ((n-1)/(2(n-2))) |∇^Σ W|².

    Reports the sample with the largest relative residual |LHS - RHS|/(1 + |LHS|).
    """
    _, points = _slice_points(model, c, samples, seed, s_hint)
    _require_unified_on(model, points, tolerance)
    n = model.dimension
    worst: LevelsetIdentity | None = None
    for p in points:
        data = slice_point_data(model, p, level=c)
        lhs = d_tensor(model.metric, model.f, p).norm_squared()
        umbilic = 2.0 * (n - 1) ** 2 / (n - 2) ** 2 * data.W**2 * data.umbilic_defect
        gradient = (n - 1) / (2.0 * (n - 2)) * data.grad_sigma_W_squared
        rhs = umbilic + gradient
        result = LevelsetIdentity(c, lhs, rhs, abs(lhs - rhs) / (1.0 + abs(lhs)), umbilic, gradient)
        if worst is None or result.residual > worst.residual:
            worst = result
    assert worst is not None
    return worst


@dataclass(frozen=True)
class ConstancyReport:
    level: float
    variations: dict[str, float]
    d_max: float
    samples: int

    def holds(self, tolerance: float, d_flat_tolerance: float = 1e-5) -> dict[str, bool]:
        """Which constancy claims hold; H and R^Σ are only claimed when D vanishes."""
        claims = {"R": True, "laplacian_f": True}
        if self.d_max <= d_flat_tolerance:
            claims |= {"H": True, "R_sigma": True, "R_nn": True}
        return {k: self.variations[k] <= tolerance for k in claims}


def constancy_checks(
    model: StaticModel,
    c: float,
    samples: int = SLICE_SAMPLES,
    seed: int = 0,
    s_hint: float | None = None,
) -> ConstancyReport:
    """Spread (max - min) of R, Δf, H, R^Σ and R_nn over sampled points of Σ."""
    _, points = _slice_points(model, c, samples, seed, s_hint)
    columns: dict[str, list[float]] = {k: [] for k in ("R", "laplacian_f", "H", "R_sigma", "R_nn")}
    d_max = 0.0
    for p in points:
        data = slice_point_data(model, p, level=c)
        columns["R"].append(data.R)
        columns["laplacian_f"].append(data.laplacian_f)
        columns["H"].append(data.H)
        columns["R_sigma"].append(data.R_sigma)
        columns["R_nn"].append(data.R_nn)
    for p in points[: min(4, len(points))]:
        d_max = max(d_max, d_tensor(model.metric, model.f, p).max_abs())
    variations = {k: float(np.ptp(v)) for k, v in columns.items()}
    return ConstancyReport(c, variations, d_max, len(points))


def _mean_curvature_at(model: StaticModel, x: np.ndarray) -> float:
    return slice_point_data(model, x).H


def gauss_codazzi_residuals(
    model: StaticModel, c: float, s_hint: float | None = None, step: float = CODAZZI_STEP
) -> tuple[float, float]:
    """(Gauss scalar residual, contracted Codazzi residual on umbilic slices).

    Gauss: R^Σ - (R - 2 R_nn + H² - |A|²).
    Codazzi: R_αn - ((n-2)/(n-1)) ∇^Σ_α H, with ∇^Σ H by central differences
    along the tangent frame vectors.
    """
    data = slice_geometry(model, c, s_hint)
    n = model.dimension
    gauss = data.R_sigma - (data.R - 2.0 * data.R_nn + data.H**2 - data.A_squared)
    grad_h = np.empty(n - 1)
    for alpha, e in enumerate(data.frame[:-1]):
        plus = _mean_curvature_at(model, data.point + step * e)
        minus = _mean_curvature_at(model, data.point - step * e)
        grad_h[alpha] = (plus - minus) / (2.0 * step)
    codazzi = data.ricci[:-1, -1] - (n - 2) / (n - 1) * grad_h
    return abs(float(gauss)), float(np.max(np.abs(codazzi)))


@dataclass(frozen=True)
class WeylNormalResult:
    applicable: bool
    value: float | None
    d_max: float
    bach_max: float
    reason: str = ""


def weyl_normal_check(
    model: StaticModel,
    c: float,
    samples: int = 2,
    seed: int = 0,
    s_hint: float | None = None,
    certification: float = _TOLERANCES.d_flat,
) -> WeylNormalResult:
    """max |W_njkn| on Σ, gated on the model being D-flat and Bach-flat there."""
    _, points = _slice_points(model, c, samples, seed, s_hint)
    d_max = max(d_tensor(model.metric, model.f, p).max_abs() for p in points)
    bach_max = max(bach(model.metric, p).max_abs() for p in points)
    if d_max > certification or bach_max > certification:
        reason = f"not D-flat and Bach-flat (max|D| = {d_max:.3e}, max|B| = {bach_max:.3e})"
        logger.info(f"Weyl normal check on {model.name} not applicable: {reason}")
        return WeylNormalResult(False, None, d_max, bach_max, reason)
    worst = 0.0
    for p in points:
        geo = point_geometry(model.metric, p)
        normal = slice_point_data(model, p, level=c).normal
        wn = np.einsum("ijkl,i,l->jk", geo.weyl(), normal, normal)
        worst = max(worst, float(np.max(np.abs(wn))))
    return WeylNormalResult(True, worst, d_max, bach_max)


@dataclass(frozen=True)
class EinsteinSliceResult:
    level: float
    deviation: float
    slice_constant: float | None
    expected_constant: float | None

    @property
    def constant_error(self) -> float | None:
        if self.slice_constant is None or self.expected_constant is None:
            return None
        return abs(self.slice_constant - self.expected_constant)


def einstein_slice_check(
    model: StaticModel,
    c: float,
    expected_constant: float | None = None,
    s_hint: float | None = None,
) -> EinsteinSliceResult:
    """Deviation of Σ from Einstein, and its constant in the fiber normalization.

    For ds² + r² g_E the slice metric is r(s_c)² g_E, so Ric^Σ = λ g_E with
    λ = r² R^Σ/(n-1); the classification normalization expects λ = (n-2)k.
    """
    warp = _warp(model)
    s_c = _resolve_level(model, c, s_hint)
    y = warp.reference_fiber_point()
    slice_metric = model.metric.restrict(warp.s_index, s_c)
    ric, r_sigma, _ = ricci_scalar_schouten(slice_metric, y)
    g_sigma = slice_metric.components(y)
    m = g_sigma.shape[0]
    deviation = float(np.max(np.abs(ric.components - r_sigma / m * g_sigma)))
    constant = None
    if len(warp.blocks) == 1:
        constant = warp.blocks[0].profile(s_c) ** 2 * r_sigma / m
    return EinsteinSliceResult(c, deviation, constant, expected_constant)


def boundary_flux_residual(
    model: StaticModel,
    c: float,
    samples: int = 4,
    seed: int = 0,
    s_hint: float | None = None,
    f_min: float = DEFAULT_F_MIN,
) -> float:
    """max |n^i f^j D_ijk| over Σ; zero by antisymmetry of D since n ∥ ∇f."""
    _, points = _slice_points(model, c, samples, seed, s_hint)
    worst = 0.0
    for p in points:
        model.require_regular(p, f_min)
        geo = point_geometry(model.metric, p)
        grad_up = geo.g_inv @ model.f.gradient(p)
        normal = grad_up / np.sqrt(grad_up @ geo.g @ grad_up)
        d = d_tensor(model.metric, model.f, p).components
        worst = max(worst, float(np.max(np.abs(np.einsum("i,j,ijk->k", normal, grad_up, d)))))
    return worst
