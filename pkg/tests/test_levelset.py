import math

import pytest

from staticlab.curvature import covariant_hessian
from staticlab.errors import PreconditionError, RegularValueError
from staticlab.levelset import (
    boundary_flux_residual,
    constancy_checks,
    einstein_slice_check,
    gauss_codazzi_residuals,
    level_parameters,
    levelset_identity_residual,
    slice_geometry,
    weyl_normal_check,
)


def test_level_parameters_on_the_sphere(s3):
    roots = level_parameters(s3, 0.5)
    assert roots == [pytest.approx(math.pi / 3, abs=1e-12)]
    assert level_parameters(s3, 2.0) == []


def test_level_parameters_on_a_periodic_model(s1xs2):
    roots = level_parameters(s1xs2, 0.5)
    assert roots == [
        pytest.approx(math.pi / 6, abs=1e-12),
        pytest.approx(5 * math.pi / 6, abs=1e-12),
    ]


def test_levels_need_a_warped_model_with_varying_potential(flat_t3):
    with pytest.raises(PreconditionError):
        level_parameters(flat_t3, 1.0)


def test_unattained_level_is_not_regular(s3):
    with pytest.raises(RegularValueError):
        slice_geometry(s3, 1.5)


def test_slice_geometry_of_a_round_sphere(s3):
    data = slice_geometry(s3, 0.5)
    assert data.s == pytest.approx(math.pi / 3)
    assert data.W == pytest.approx(0.75)
    assert data.R_sigma == pytest.approx(8.0 / 3.0)
    assert data.R == pytest.approx(6.0)
    assert data.R_nn == pytest.approx(2.0)
    assert abs(data.H) == pytest.approx(2.0 / math.sqrt(3.0))
    assert data.umbilic_defect < 1e-12
    assert set(data.to_row()) == {"c", "s", "W", "H", "A2", "R_sigma", "R_nn", "grad_sigma_W2"}


def test_gauss_and_codazzi(s3):
    gauss, codazzi = gauss_codazzi_residuals(s3, 0.5)
    assert gauss < 1e-8
    assert codazzi < 1e-6


@pytest.mark.parametrize(("fixture", "level"), [("s3", 0.5), ("s1xs2", 0.5)])
def test_slices_are_einstein_with_unit_constant(fixture, level, request):
    model = request.getfixturevalue(fixture)
    result = einstein_slice_check(model, level, expected_constant=1.0)
    assert result.deviation < 1e-8
    assert result.slice_constant == pytest.approx(1.0)
    assert result.constant_error < 1e-8


def test_constancy_on_a_d_flat_model(s3):
    report = constancy_checks(s3, 0.5, samples=6, seed=2)
    assert report.samples == 6
    assert report.d_max < 1e-6
    holds = report.holds(1e-6)
    assert set(holds) == {"R", "laplacian_f", "H", "R_sigma", "R_nn"}
    assert all(holds.values())


def test_levelset_identity_and_boundary_flux(s3):
    identity = levelset_identity_residual(s3, 0.5, samples=3)
    assert identity.residual < 1e-5
    assert identity.lhs < 1e-10
    assert boundary_flux_residual(s3, 0.5) <= 1e-10


def test_weyl_normal_on_a_conformally_flat_model(s3):
    result = weyl_normal_check(s3, 0.5)
    assert result.applicable
    assert result.value < 1e-8
    assert result.reason == ""


@pytest.mark.slow
def test_levelset_identity_with_nonzero_d(warped5):
    identity = levelset_identity_residual(warped5, 1.0, samples=3, seed=1)
    assert identity.lhs > 1e-3
    assert identity.residual < 1e-5
    assert identity.umbilic_term + identity.gradient_term == pytest.approx(identity.rhs)


@pytest.mark.slow
def test_mean_curvature_from_the_normal_hessian(warped5):
    data = slice_geometry(warped5, 1.0)
    hess = covariant_hessian(warped5.metric, warped5.f, data.point)
    f_nn = float(data.normal @ hess @ data.normal)
    expected = (f_nn - data.laplacian_f) / math.sqrt(data.W)
    assert data.H == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert data.s == pytest.approx(0.0, abs=1e-8)
