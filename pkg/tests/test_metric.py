import math

import numpy as np
import pytest
import sympy as sp

from staticlab.curvature import ricci_scalar_schouten
from staticlab.errors import DegenerateMetricError, OutOfDomainError
from staticlab.geometry.chart import Chart
from staticlab.geometry.diff import DiffEngine, DiffMode
from staticlab.geometry.metric import make_chart_metric, make_scalar_field
from staticlab.geometry.profiles import ExpressionProfile


@pytest.fixture
def plane() -> Chart:
    return Chart(("x", "y"), ((-2.0, 2.0), (-2.0, 2.0)))


def test_symbolic_derivatives_are_exact(plane):
    x, y = plane.symbols
    metric = make_chart_metric(plane, [[1 + x**2, x * y], [x * y, 2 + y**2]])
    point = np.array([0.5, -0.3])
    dg = metric.derivatives(point, 1)
    assert dg.shape == (2, 2, 2)
    assert np.allclose(dg[0], [[1.0, -0.3], [-0.3, 0.0]])
    assert np.allclose(dg[1], [[0.0, 0.5], [0.5, -0.6]])
    d2g = metric.derivatives(point, 2)
    assert d2g[0, 1, 0, 1] == pytest.approx(1.0)
    assert d2g[1, 0, 0, 1] == pytest.approx(1.0)


def test_finite_difference_engine_matches_analytic(plane):
    x, y = plane.symbols
    components = [[sp.exp(x), sp.sin(y) / 4], [sp.sin(y) / 4, 1 + x**2]]
    analytic = make_chart_metric(plane, components)
    numeric = analytic.with_engine(DiffEngine(DiffMode.FINITE_DIFFERENCE))
    point = np.array([0.2, 0.4])
    assert numeric.mode is DiffMode.FINITE_DIFFERENCE
    assert np.allclose(numeric.derivatives(point, 1), analytic.derivatives(point, 1), atol=1e-9)
    assert np.allclose(numeric.derivatives(point, 2), analytic.derivatives(point, 2), atol=1e-6)


def test_callable_components_use_finite_differences(plane):
    metric = make_chart_metric(plane, lambda p: np.diag([1.0 + p[0] ** 2, 1.0]))
    assert metric.mode is DiffMode.FINITE_DIFFERENCE
    assert metric.derivatives(np.array([0.5, 0.0]), 1)[0, 0, 0] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        make_chart_metric(plane, lambda p: np.eye(2), engine=DiffEngine(DiffMode.ANALYTIC))


def test_degenerate_metric_reports_the_point(plane):
    x, _ = plane.symbols
    metric = make_chart_metric(plane, [[x, 0], [0, 1]])
    with pytest.raises(DegenerateMetricError) as excinfo:
        metric.components(np.array([-0.5, 0.0]))
    assert np.allclose(excinfo.value.point, [-0.5, 0.0])


def test_components_must_be_symmetric_and_square(plane):
    x, y = plane.symbols
    with pytest.raises(ValueError, match="not symmetric"):
        make_chart_metric(plane, [[1, x], [y, 1]])
    with pytest.raises(ValueError):
        make_chart_metric(plane, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_out_of_chart_points_are_rejected(plane):
    metric = make_chart_metric(plane, sp.eye(2))
    with pytest.raises(OutOfDomainError):
        metric.components(np.array([3.0, 0.0]))
    with pytest.raises(ValueError):
        metric.derivatives(np.array([0.0, 0.0]), 4)


def test_restriction_freezes_a_coordinate():
    chart = Chart(("x", "y", "z"), ((-1.0, 1.0),) * 3)
    x, y, _ = chart.symbols
    metric = make_chart_metric(chart, sp.diag(1, 1 + x**2, 2 + y))
    slice_metric = metric.restrict(0, 0.5)
    assert slice_metric.chart.coordinates == ("y", "z")
    point = np.array([0.2, 0.0])
    assert np.allclose(slice_metric.components(point), np.diag([1.25, 2.2]))
    dg = slice_metric.derivatives(point, 1)
    assert dg.shape == (2, 2, 2)
    assert dg[0, 1, 1] == pytest.approx(1.0)
    assert dg[1, 0, 0] == pytest.approx(0.0)
    g, _, d2g = slice_metric.jet(point, 2)
    assert np.allclose(g, np.diag([1.25, 2.2]))
    assert d2g.shape == (2, 2, 2, 2)


def test_slice_of_the_round_sphere_has_curvature(s3):
    slice_metric = s3.metric.restrict(0, math.pi / 3)
    _, scalar, _ = ricci_scalar_schouten(slice_metric, np.array([1.0, 0.5]))
    assert scalar == pytest.approx(8.0 / 3.0, rel=1e-8)


def test_scalar_field_with_bound_profile(plane):
    profile = ExpressionProfile("w", "exp(s)")
    field = make_scalar_field(plane, "w(x) * y", {"w": (profile, 0)})
    point = np.array([0.3, 2.0 - 0.5])
    assert field.value(point) == pytest.approx(math.exp(0.3) * 1.5)
    assert np.allclose(field.gradient(point), [math.exp(0.3) * 1.5, math.exp(0.3)])
    hessian = field.partial_hessian(point)
    assert hessian[0, 1] == pytest.approx(math.exp(0.3))
    assert hessian[1, 1] == pytest.approx(0.0)


def test_scalar_field_perturbations(plane):
    x, y = plane.symbols
    field = make_scalar_field(plane, x * y)
    shifted = field.shifted(2.0)
    assert shifted.value(np.array([1.0, 1.0])) == pytest.approx(3.0)
    bumped = field.perturbed(lambda p: p[0] ** 2, "bumped")
    assert bumped.value(np.array([1.0, 1.0])) == pytest.approx(2.0)
    assert bumped.gradient(np.array([1.0, 1.0]))[0] == pytest.approx(3.0, abs=1e-8)
