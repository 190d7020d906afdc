import math

import numpy as np
import pytest

from staticlab.errors import InvalidWarpError, PreconditionError
from staticlab.geometry.fibers import FiberSpec
from staticlab.geometry.warped import make_doubly_warped_product, make_warped_product


def test_round_sphere_as_warped_product(s3_point):
    metric = make_warped_product("sin(s)", FiberSpec.sphere(2), 3, s_domain=(0.0, math.pi))
    assert metric.chart.coordinates == ("s", "y1", "y2")
    s, theta, _ = s3_point
    expected = np.diag([1.0, math.sin(s) ** 2, math.sin(s) ** 2 * math.sin(theta) ** 2])
    assert np.allclose(metric.components(s3_point), expected)
    warp = metric.warp
    assert warp is not None
    assert warp.fiber_volume == pytest.approx(4 * math.pi)
    assert warp.density(math.pi / 2) == pytest.approx(1.0)
    assert warp.point(0.4)[0] == 0.4


def test_warp_must_be_positive():
    with pytest.raises(InvalidWarpError, match="not positive"):
        make_warped_product("cos(s)", FiberSpec.sphere(2), 3, s_domain=(0.0, math.pi))


def test_periodic_warp_checks_a_full_period():
    with pytest.raises(InvalidWarpError):
        make_warped_product("1 + 2*sin(s)", FiberSpec.sphere(2), 3, period=2 * math.pi)
    metric = make_warped_product("1 + sin(s)/2", FiberSpec.sphere(2), 3, period=2 * math.pi)
    assert metric.chart.is_periodic(0)


@pytest.mark.parametrize(
    "fiber, n",
    [(FiberSpec.sphere(2), 2), (FiberSpec.sphere(3), 3)],
)
def test_warped_product_preconditions(fiber, n):
    with pytest.raises(PreconditionError):
        make_warped_product(1.0, fiber, n)


def test_doubly_warped_layout():
    metric = make_doubly_warped_product(
        "1 + s**2", "2 - s", FiberSpec.sphere(2), FiberSpec.sphere(2), s_domain=(-1.0, 1.0)
    )
    assert metric.dimension == 5
    assert metric.chart.coordinates == ("s", "y1", "y2", "y3", "y4")
    point = metric.warp.point(0.5)
    g = metric.components(point)
    assert g[1, 1] == pytest.approx(1.25**2)
    assert g[3, 3] == pytest.approx(1.5**2)
    assert g[1, 3] == 0.0
    assert metric.warp.fiber_dimension == 4
    assert metric.warp.density(0.5) == pytest.approx(1.25**2 * 1.5**2)
    assert set(metric.warp.profiles) == {"a", "b"}


def test_fiber_points_stay_in_the_fiber_chart():
    metric = make_warped_product("sin(s)", FiberSpec.sphere(2), 3, s_domain=(0.0, math.pi))
    points = metric.warp.fiber_points(16, np.random.default_rng(0))
    assert points.shape == (16, 2)
    for y in points:
        metric.chart.check_point(metric.warp.point(1.0, y))
