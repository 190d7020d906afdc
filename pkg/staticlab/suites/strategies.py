"""
Implements the Strategy pattern for the verification suites.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from loguru import logger

from ..curvature import (
    bach_routes,
    complete_cotton_divergence,
    cotton,
    covariant_divergence,
    d_tensor,
    decomposition_residual,
    point_geometry,
    ricci_identity_residual,
    riemann,
    weyl,
    weyl_divergence_check,
)
from ..errors import ModelConfigError
from ..geometry.diff import DiffMode
from ..kobayashi import (
    CatalogEntry,
    OdeState,
    build_catalog,
    certify,
    find_periodic_warp,
    periodic_warp_model,
)
from ..levelset import (
    boundary_flux_residual,
    constancy_checks,
    einstein_slice_check,
    gauss_codazzi_residuals,
    levelset_identity_residual,
    slice_geometry,
    weyl_normal_check,
)
from ..models import model_levels
from ..quadrature import (
    IdentityCheck,
    PointCache,
    check_3d_identity,
    check_full_divergence_identity,
    check_helper_identity,
    check_main_identity,
    is_closed,
)
from ..statics import (
    ModelKind,
    StaticModel,
    bach_gradient_contraction_residual,
    bach_rewrite_residual,
    cpe_residual,
    d_closed_form,
    phi_psi,
    scalar_curvature_gradient,
    static_residual,
    static_scalar_relation_residual,
    trace_identity_residual,
    unified_residual,
    vacuum_static_residual,
)
from .base import CheckResult, Suite, SuiteContext, SuiteName

__all__ = [
    "CurvatureSuite",
    "StaticsSuite",
    "LevelsetSuite",
    "IntegralsSuite",
    "OdeSuite",
    "CatalogSuite",
    "SUITES",
    "make_suite",
]

# n^i f^j D_ijk vanishes identically; anything above roundoff is a pipeline bug
BOUNDARY_FLUX_TOLERANCE = 1e-10

# Catalog entries whose complete Cotton divergence is measured (fourth derivatives, slow)
COTTON_DIVERGENCE_ENTRIES = frozenset({"periodic_r3"})


def _worst(values: list[float]) -> float:
    return max(values, default=0.0)


def _contracted_bianchi(model: StaticModel, x: np.ndarray) -> float:
    """max |div Ric - dR/2|."""
    metric = model.metric
    div_ric = covariant_divergence(metric, lambda y: point_geometry(metric, y).ricci, x, slot=0)
    return float(np.max(np.abs(div_ric - 0.5 * scalar_curvature_gradient(metric, x))))


class CurvatureSuite(Suite):
    """Algebraic symmetries, the Ricci decomposition and the Bianchi-type identities."""

    name = SuiteName.CURVATURE

    def run(self, model: StaticModel | None) -> list[CheckResult]:
        assert model is not None
        ctx, tol = self.context, self.context.tolerances
        metric, n = model.metric, model.dimension
        points = model.sample_points(ctx.samples, ctx.seed)
        heavy = points[: ctx.heavy_samples]
        riemann_tol = tol.riemann if metric.mode is DiffMode.ANALYTIC else tol.third_order

        results = [
            self.check(
                model, "riemann_symmetries",
                _worst([riemann(metric, p).symmetry_defect() for p in points]), riemann_tol,
                mode=metric.mode.value,
            ),
            self.check(
                model, "ricci_decomposition",
                _worst([decomposition_residual(metric, p) for p in points]), riemann_tol,
            ),
        ]
        if n == 3:
            results.append(
                self.check(model, "weyl_vanishes", _worst([weyl(metric, p).max_abs() for p in points]), riemann_tol)
            )
        else:
            results.append(
                self.check(model, "weyl_traceless", _worst([weyl(metric, p).trace_defect() for p in points]), riemann_tol)
            )
            results.append(
                self.check(
                    model, "weyl_divergence",
                    _worst([weyl_divergence_check(metric, p) for p in heavy]), tol.third_order,
                )
            )
        results.append(
            self.check(
                model, "cotton_symmetries",
                _worst([cotton(metric, p).symmetry_defect() for p in heavy]), tol.third_order,
            )
        )
        results.append(
            self.check(
                model, "contracted_bianchi",
                _worst([_contracted_bianchi(model, p) for p in heavy]), tol.third_order,
            )
        )

        routes = [bach_routes(metric, p) for p in heavy]
        results.append(
            self.check(
                model, "bach_symmetric",
                _worst([primary.symmetry_defect() for primary, _, _ in routes]), tol.bach,
                bach_max=_worst([primary.max_abs() for primary, _, _ in routes]),
            )
        )
        if n >= 4:
            results.append(self.check(model, "bach_routes", _worst([diff for _, _, diff in routes]), tol.bach))
        else:
            results.append(self.skip(model, "bach_routes", "the Weyl route needs n >= 4"))
        return results


class StaticsSuite(Suite):
    """Residuals of the static equations and the D-tensor and Bach rewrites."""

    name = SuiteName.STATICS

    def _kind_residual(self, model: StaticModel, points: np.ndarray) -> list[CheckResult]:
        tol = self.context.tolerances
        metric, f = model.metric, model.f
        match model.kind:
            case ModelKind.VACUUM_STATIC:
                value = _worst([vacuum_static_residual(metric, f, p).max_abs() for p in points])
                return [self.check(model, "vacuum_static_residual", value, tol.unified_residual)]
            case ModelKind.STATIC:
                value = _worst([static_residual(metric, f, p).max_abs() for p in points])
                return [self.check(model, "static_residual", value, tol.unified_residual)]
            case ModelKind.CPE:
                return self.guarded(
                    model, "cpe_residual",
                    lambda: [
                        self.check(
                            model, "cpe_residual",
                            _worst([cpe_residual(metric, f, p).max_abs() for p in points]),
                            tol.unified_residual,
                        )
                    ],
                )
        return []

    def _regular(self, model: StaticModel, points: np.ndarray) -> np.ndarray:
        return np.array([p for p in points if abs(model.f.value(p)) >= self.context.f_min])

    def run(self, model: StaticModel | None) -> list[CheckResult]:
        assert model is not None
        ctx, tol = self.context, self.context.tolerances
        points = model.sample_points(ctx.samples, ctx.seed)
        heavy = points[: ctx.heavy_samples]

        results = [
            self.check(
                model, "trace_identity",
                _worst([trace_identity_residual(model, p) for p in points]), tol.trace_identity,
            ),
            self.check(
                model, "unified_residual",
                _worst([unified_residual(model, p).max_abs() for p in points]), tol.unified_residual,
                kind=model.kind.value,
            ),
        ]
        results.extend(self._kind_residual(model, points))
        if model.kind is not ModelKind.UNIFIED:
            results.append(
                self.check(model, "psi_routes", _worst([phi_psi(model, p).agreement for p in points]), tol.psi_routes)
            )

        def d_routes() -> list[CheckResult]:
            pairs = [d_closed_form(model, p, tol.unified_residual) for p in heavy]
            return [
                self.check(
                    model, "d_routes", _worst([diff for _, diff in pairs]), tol.d_routes,
                    d_max=_worst([value.max_abs() for value, _ in pairs]),
                )
            ]

        results.extend(self.guarded(model, "d_routes", d_routes))

        regular = self._regular(model, heavy)
        if len(regular):
            results.append(
                self.check(
                    model, "bach_rewrite",
                    _worst([bach_rewrite_residual(model, p, ctx.f_min) for p in regular]), tol.bach_rewrite,
                )
            )
            contractions = [bach_gradient_contraction_residual(model, p, ctx.f_min) for p in regular]
            results.append(
                self.check(
                    model, "bach_gradient_contraction", _worst([r for _, r in contractions]), tol.bach_rewrite,
                    contraction_max=_worst([abs(v) for v, _ in contractions]),
                )
            )
        else:
            reason = f"no sample point with |f| >= {ctx.f_min:g}"
            results += [self.skip(model, "bach_rewrite", reason), self.skip(model, "bach_gradient_contraction", reason)]

        if model.kind in (ModelKind.VACUUM_STATIC, ModelKind.STATIC):
            results.append(
                self.check(
                    model, "static_scalar_relation",
                    _worst([static_scalar_relation_residual(model, p) for p in heavy]), tol.third_order,
                )
            )
        results.append(
            self.check(
                model, "ricci_identity",
                _worst([ricci_identity_residual(model.metric, model.f, p) for p in heavy]), tol.third_order,
            )
        )
        return results


class LevelsetSuite(Suite):
    """Geometry of the regular level sets of f."""

    name = SuiteName.LEVELSET

    def _level(self, model: StaticModel, c: float) -> list[CheckResult]:
        ctx, tol = self.context, self.context.tolerances
        tag = f"[f={c:.6g}]"
        identity = levelset_identity_residual(
            model, c, samples=ctx.samples, seed=ctx.seed, tolerance=tol.unified_residual
        )
        results = [
            self.check(
                model, f"levelset_identity{tag}", identity.residual, tol.levelset_identity,
                lhs=identity.lhs, rhs=identity.rhs, umbilic_term=identity.umbilic_term,
                gradient_term=identity.gradient_term,
            )
        ]

        report = constancy_checks(model, c, seed=ctx.seed)
        for quantity in report.holds(tol.constancy, tol.d_flat):
            results.append(
                self.check(
                    model, f"constancy.{quantity}{tag}", report.variations[quantity], tol.constancy,
                    d_max=report.d_max, samples=report.samples,
                )
            )

        gauss, codazzi = gauss_codazzi_residuals(model, c)
        results.append(self.check(model, f"gauss{tag}", gauss, tol.gauss_codazzi))
        results.append(self.check(model, f"codazzi{tag}", codazzi, tol.gauss_codazzi))

        normal = weyl_normal_check(model, c, seed=ctx.seed, certification=tol.d_flat)
        if normal.applicable:
            assert normal.value is not None
            results.append(self.check(model, f"weyl_normal{tag}", normal.value, tol.weyl_normal))
            einstein = einstein_slice_check(model, c)
            results.append(
                self.check(
                    model, f"einstein_slice{tag}", einstein.deviation, tol.einstein_slice,
                    slice_constant=einstein.slice_constant,
                )
            )
        else:
            results.append(self.skip(model, f"weyl_normal{tag}", normal.reason))

        flux = boundary_flux_residual(model, c, samples=ctx.samples, seed=ctx.seed, f_min=ctx.f_min)
        results.append(self.check(model, f"boundary_flux{tag}", flux, BOUNDARY_FLUX_TOLERANCE))

        self.artifacts.setdefault(f"{model.name}.slices", []).append(slice_geometry(model, c).to_row())
        return results

    def run(self, model: StaticModel | None) -> list[CheckResult]:
        assert model is not None
        if model.metric.warp is None:
            return [self.skip(model, "levelset", "level sets are sampled on warped models only")]
        if model.constant_potential:
            return [self.skip(model, "levelset", "f is constant; it has no regular level sets")]
        try:
            levels = model_levels(model)
        except ModelConfigError as e:
            return [self.skip(model, "levelset", str(e))]
        results = []
        for c in levels:
            results.extend(self.guarded(model, f"levelset[f={c:.6g}]", lambda c=c: self._level(model, c)))
        return results


class IntegralsSuite(Suite):
    """The divergence identities for f^p-weighted Bach integrals."""

    name = SuiteName.INTEGRALS

    def _record(self, model: StaticModel, check: IdentityCheck) -> list[CheckResult]:
        tol = self.context.tolerances
        label = f"{check.identity}[p={check.p}]"
        stability = max(
            est.delta / (1.0 + abs(est.value)) for est in (check.lhs, check.rhs)
        )
        record = check.to_record(tol.integral_identity, tol.quadrature_stability)
        return [
            self.check(model, label, check.residual, tol.integral_identity, **record),
            self.check(model, f"{label}.stability", stability, tol.quadrature_stability),
        ]

    def _guard(self, model: StaticModel, label: str, fn: Callable[[], IdentityCheck]) -> list[CheckResult]:
        return self.guarded(model, label, lambda: self._record(model, fn()))

    def run(self, model: StaticModel | None) -> list[CheckResult]:
        assert model is not None
        ctx = self.context
        if model.constant_potential:
            return [self.skip(model, "integrals", "f is constant; every integrand vanishes")]

        results: list[CheckResult] = []
        if model.metric.warp is not None:
            c1, c2 = model_levels(model)
            cache = PointCache(model)
            for p in ctx.p_values:
                results += self._guard(
                    model, f"bach_gradient_integral[p={p}]",
                    lambda p=p: check_main_identity(model, c1, c2, p, ctx.rule, ctx.f_min, cache),
                )

        if not is_closed(model):
            results.append(self.skip(model, "closed_identities", "the model is not closed"))
            return results
        for p in ctx.p_values:
            results += self._guard(model, f"bach_helper_integral[p={p}]", lambda p=p: check_helper_identity(model, p, ctx.rule))
            if p % 2:
                continue
            results += self._guard(
                model, f"bach_full_divergence[p={p}]", lambda p=p: check_full_divergence_identity(model, p, ctx.rule)
            )
            if model.dimension == 3:
                results += self._guard(model, f"cotton_full_divergence[p={p}]", lambda p=p: check_3d_identity(model, p, ctx.rule))
        return results


class OdeSuite(Suite):
    """Shooting, first integrals and closure for the warp system."""

    name = SuiteName.ODE

    def run(self, model: StaticModel | None = None) -> list[CheckResult]:
        ctx, tol = self.context, self.context.tolerances
        params = ctx.ode
        warp = find_periodic_warp(params.n, params.R, params.a, r0=params.r0)
        if warp is None:
            return [self.skip(model, "periodic_warp", f"no well for n={params.n}, R={params.R:g}, a={params.a:g}")]
        system = warp.system
        results = [
            self.check(model, "closure", warp.closure, tol.closure, period=warp.period, constant=warp.constant),
        ]

        y0 = warp.solution.trajectory.initial_state
        state = OdeState(0.0, float(y0[0]), float(y0[1]), float(y0[2]), float(y0[3]), params.n, params.R)
        long_run = system.solve(state, (0.0, params.periods * warp.period))
        drift = long_run.drift(count=64 * params.periods + 1)
        scale = 1.0 + abs(system.a) + abs(long_run.k)
        results.append(
            self.check(
                model, "first_integrals", max(drift.a, drift.k) / scale, tol.first_integrals,
                periods=params.periods, a_drift=drift.a, k_drift=drift.k,
            )
        )

        tight = find_periodic_warp(params.n, params.R, params.a, r0=params.r0, rtol=1e-13, atol=1e-15)
        if tight is not None:
            results.append(
                self.check(model, "period_stability", abs(tight.period - warp.period), tol.closure, tight_period=tight.period)
            )

        if warp.constant:
            results.append(self.skip(model, "proportionality", "constant warp; f is not tied to r'"))
        else:
            results.append(
                self.check(model, "proportionality", warp.solution.proportionality_residual(), tol.first_integrals)
            )

        periodic = periodic_warp_model(warp, f"ode_n{params.n}", product=False)
        points = periodic.sample_points(ctx.samples, ctx.seed)
        results.append(
            self.check(
                model, "vacuum_static_residual",
                _worst([vacuum_static_residual(periodic.metric, periodic.f, p).max_abs() for p in points]),
                tol.unified_residual, k=warp.k,
            )
        )
        self.artifacts["ode_trajectory"] = warp.solution.rows()
        logger.info(f"ODE suite: period {warp.period:.12g}, k {warp.k:.10g}")
        return results


class CatalogSuite(Suite):
    """Certifies every classified vacuum static space in the catalog."""

    name = SuiteName.CATALOG

    def _entry_checks(self, entry: CatalogEntry) -> list[CheckResult]:
        ctx, tol = self.context, self.context.tolerances
        model = entry.model
        cert = certify(entry, samples=ctx.samples, seed=ctx.seed, bach_samples=ctx.heavy_samples)
        results = [
            self.check(model, "vacuum_static_residual", cert.vacuum_static, tol.unified_residual),
            self.check(model, "bach_flat", cert.bach, tol.bach),
            self.check(
                model, "scalar_curvature", cert.scalar_curvature_error, tol.golden * 10, expected=entry.scalar_curvature
            ),
        ]
        if cert.cotton is not None:
            results.append(self.check(model, "cotton_flat", cert.cotton, tol.third_order))
        if cert.slice_deviation is not None:
            results.append(self.check(model, "einstein_slice", cert.slice_deviation, tol.einstein_slice))
        if cert.slice_constant_error is not None:
            results.append(
                self.check(
                    model, "slice_constant", cert.slice_constant_error, tol.einstein_slice,
                    expected=entry.slice_constant,
                )
            )

        heavy = model.sample_points(ctx.heavy_samples, ctx.seed)
        results.append(
            self.check(
                model, "d_flat", _worst([d_tensor(model.metric, model.f, p).max_abs() for p in heavy]), tol.d_flat
            )
        )
        if entry.dimension >= 4:
            results.append(
                self.check(
                    model, "weyl_divergence", _worst([weyl_divergence_check(model.metric, p) for p in heavy]),
                    tol.third_order,
                )
            )
        if entry.name in COTTON_DIVERGENCE_ENTRIES:
            results.append(
                self.check(
                    model, "complete_cotton_divergence",
                    abs(complete_cotton_divergence(model.metric, heavy[0])), tol.third_order,
                )
            )
        self.artifacts.setdefault("catalog", []).append(entry.to_record(tol))
        return results

    def run(self, model: StaticModel | None = None) -> list[CheckResult]:
        results = []
        for entry in build_catalog(certified=False):
            results.extend(self.guarded(entry.model, "certification", lambda e=entry: self._entry_checks(e)))
        return results


SUITES: dict[SuiteName, type[Suite]] = {
    SuiteName.CURVATURE: CurvatureSuite,
    SuiteName.STATICS: StaticsSuite,
    SuiteName.LEVELSET: LevelsetSuite,
    SuiteName.INTEGRALS: IntegralsSuite,
    SuiteName.ODE: OdeSuite,
    SuiteName.CATALOG: CatalogSuite,
}


def make_suite(name: SuiteName, context: SuiteContext) -> Suite:
    try:
        suite_class = SUITES[name]
    except KeyError as e:
        raise ModelConfigError(f"Unknown suite '{name}'. Valid suites: {[s.value for s in SUITES]}") from e
    return suite_class(context)
