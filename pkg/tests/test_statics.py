import math

import numpy as np
import pytest
import sympy as sp

from staticlab.curvature import covariant_hessian, point_geometry
from staticlab.errors import PreconditionError
from staticlab.geometry.fibers import FiberSpec
from staticlab.statics import (
    ModelKind,
    bach_gradient_contraction_residual,
    bach_rewrite_residual,
    cpe_residual,
    d_closed_form,
    manufacture_static_warped,
    phi_psi,
    static_residual,
    static_scalar_relation_residual,
    trace_identity_residual,
    unified_residual,
    unified_sensitivity,
    vacuum_static_residual,
)


def test_height_function_is_vacuum_static(s3, s3_point):
    assert s3.kind is ModelKind.VACUUM_STATIC
    assert vacuum_static_residual(s3.metric, s3.f, s3_point).max_abs() < 1e-8
    assert static_residual(s3.metric, s3.f, s3_point).max_abs() < 1e-8
    assert unified_residual(s3, s3_point).max_abs() < 1e-8
    assert trace_identity_residual(s3, s3_point) < 1e-10


def test_phi_on_the_sphere(s3, s3_point):
    # tr S = 3/2 and Δf = -3f, so Φ = 3f/2
    assert s3.phi_value(s3_point) == pytest.approx(1.5 * math.cos(1.0))
    assert phi_psi(s3, s3_point).agreement < 1e-7


def test_critical_point_equation_on_the_sphere(cpe_s3, s3_point):
    assert cpe_s3.kind is ModelKind.CPE
    assert cpe_residual(cpe_s3.metric, cpe_s3.f, s3_point).max_abs() < 1e-8
    assert unified_residual(cpe_s3, s3_point).max_abs() < 1e-8
    assert phi_psi(cpe_s3, s3_point).agreement < 1e-7


def test_cpe_needs_constant_scalar_curvature(warped4):
    with pytest.raises(PreconditionError, match="not constant"):
        cpe_residual(warped4.metric, warped4.f, warped4.metric.warp.point(0.3))


def test_static_scalar_relation(s3, s3_point):
    assert static_scalar_relation_residual(s3, s3_point) < 1e-7


def test_d_closed_form_on_the_sphere(s3, s3_point):
    value, difference = d_closed_form(s3, s3_point)
    assert value.max_abs() < 1e-8
    assert difference < 1e-7


def test_d_closed_form_requires_the_unified_equation(s3, s3_point):
    broken = s3.perturbed(s3.metric.chart.symbols[0] ** 2 / 10, "broken")
    with pytest.raises(PreconditionError, match="unified equation"):
        d_closed_form(broken, s3_point)


def test_bach_rewrites_on_the_sphere(s3, s3_point):
    assert bach_rewrite_residual(s3, s3_point) < 1e-6
    lhs, residual = bach_gradient_contraction_residual(s3, s3_point)
    assert abs(lhs) < 1e-6
    assert residual < 1e-6


def test_rewrites_need_a_regular_potential(s3):
    equator = np.array([math.pi / 2, 1.0, 1.0])
    with pytest.raises(PreconditionError, match="f_min"):
        s3.require_regular(equator)
    with pytest.raises(PreconditionError):
        bach_rewrite_residual(s3, equator)


def test_unified_residual_is_linear_in_a_perturbation(s3, s3_point):
    bump = s3.metric.chart.symbols[0] ** 2
    coarse, fine = unified_sensitivity(s3, [s3_point], bump, epsilons=(1e-2, 1e-3))
    assert coarse > 1e-4
    assert coarse / fine == pytest.approx(10.0, rel=1e-3)


def test_sample_points_keep_away_from_the_poles(s3):
    points = s3.sample_points(50, seed=4)
    assert points.shape == (50, 3)
    assert points[:, 0].min() >= 0.1 * math.pi
    assert points[:, 0].max() <= 0.9 * math.pi
    assert np.array_equal(points, s3.sample_points(50, seed=4))


def test_manufactured_warped_model(warped4):
    assert warped4.kind is ModelKind.STATIC
    assert warped4.f.value(warped4.metric.warp.point(0.0)) == pytest.approx(1.0)
    for s in (-0.6, 0.0, 0.5):
        x = warped4.metric.warp.point(s)
        assert static_residual(warped4.metric, warped4.f, x).max_abs() < 1e-7
        assert unified_residual(warped4, x).max_abs() < 1e-7
    _, difference = d_closed_form(warped4, warped4.metric.warp.point(0.2))
    assert difference < 1e-5


def test_manufacturing_needs_nonzero_initial_data():
    with pytest.raises(PreconditionError, match="f0"):
        manufacture_static_warped("1", FiberSpec.sphere(2), 3, 0.0, 0.0, (0.0, 1.0))


@pytest.mark.slow
def test_manufactured_doubly_warped_model(warped5):
    assert warped5.dimension == 5
    assert warped5.kind is ModelKind.STATIC
    x = warped5.metric.warp.point(0.2)
    assert static_residual(warped5.metric, warped5.f, x).max_abs() < 1e-6


def test_vacuum_form_and_substituted_form_agree(s3, s3_point):
    geo = point_geometry(s3.metric, s3_point)
    hess = covariant_hessian(s3.metric, s3.f, s3_point)
    substituted = hess - s3.f.value(s3_point) * (geo.ricci - geo.scalar / 2 * geo.g)
    assert np.max(np.abs(substituted)) < 1e-8
    assert vacuum_static_residual(s3.metric, s3.f, s3_point).max_abs() < 1e-8
    bumped = s3.perturbed(s3.metric.chart.symbols[0] ** 2 / 10, "bumped")
    assert vacuum_static_residual(bumped.metric, bumped.f, s3_point).max_abs() > 1e-3


@pytest.mark.slow
def test_d_routes_agree_on_the_doubly_warped_model(warped5):
    points = warped5.sample_points(100, seed=11)
    differences = [d_closed_form(warped5, p)[1] for p in points]
    assert len(differences) == 100
    assert max(differences) <= 1e-5
    assert max(d_closed_form(warped5, p)[0].max_abs() for p in points[:5]) > 1e-3


@pytest.mark.slow
def test_bach_rewrite_on_the_doubly_warped_model(warped5):
    points = [p for p in warped5.sample_points(8, seed=3) if abs(warped5.f.value(p)) >= 1e-3]
    assert points
    assert max(bach_rewrite_residual(warped5, p) for p in points) <= 1e-4
    _, residual = bach_gradient_contraction_residual(warped5, points[0])
    assert residual <= 1e-4


@pytest.mark.slow
def test_shifted_potential_breaks_the_bach_rewrite(warped5):
    shifted = warped5.perturbed(sp.Float(4.0), "warped5_shifted")
    points = warped5.sample_points(4, seed=3)
    assert max(bach_rewrite_residual(shifted, p) for p in points) > 1e-3


def test_perturbing_the_doubly_warped_potential_is_first_order(warped5):
    s = warped5.metric.chart.symbols[0]
    points = warped5.sample_points(2, seed=5)
    coarse, fine = unified_sensitivity(warped5, points, s**2, epsilons=(1e-3, 1e-4))
    assert coarse > 1e-5
    assert coarse / fine == pytest.approx(10.0, rel=5e-2)
