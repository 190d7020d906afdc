import math

import pytest

from staticlab.geometry.fibers import FiberKind, FiberSpec


@pytest.mark.parametrize(
    "fiber, expected",
    [
        (FiberSpec.sphere(2), 1.0),
        (FiberSpec.sphere(3, radius=2.0), 0.5),
        (FiberSpec.torus(2), 0.0),
        (FiberSpec.hyperbolic(2), -1.0),
        (FiberSpec.sphere_product(radius=0.5), 4.0),
    ],
)
def test_einstein_constants(fiber, expected):
    assert fiber.einstein_constant == pytest.approx(expected)
    assert fiber.scalar_curvature == pytest.approx(fiber.dimension * expected)


@pytest.mark.parametrize(
    "fiber",
    [
        FiberSpec.sphere(2, radius=1.5),
        FiberSpec.sphere(3),
        FiberSpec.torus(2),
        FiberSpec.hyperbolic(2, radius=2.0),
        FiberSpec.sphere_product(),
    ],
    ids=lambda fiber: fiber.label,
)
def test_fiber_metrics_are_einstein(fiber):
    assert fiber.einstein_defect(points=4, seed=3) < 1e-8


def test_volumes():
    assert FiberSpec.sphere(2).volume == pytest.approx(4 * math.pi)
    assert FiberSpec.sphere(3).volume == pytest.approx(2 * math.pi**2)
    assert FiberSpec.torus(2, length=3.0).volume == pytest.approx(9.0)
    assert FiberSpec.sphere_product().volume == pytest.approx(16 * math.pi**2)


def test_reference_point_lies_in_the_chart():
    for fiber in (FiberSpec.sphere(3), FiberSpec.hyperbolic(3), FiberSpec.sphere_product()):
        fiber.chart().check_point(fiber.reference_point())


def test_sphere_product_needs_equal_radii():
    with pytest.raises(ValueError, match="not Einstein"):
        FiberSpec.sphere_product(1.0, 2.0)
    with pytest.raises(ValueError):
        FiberSpec(FiberKind.SPHERE_PRODUCT, 3)


@pytest.mark.parametrize("kwargs", [{"dimension": 1}, {"dimension": 2, "radius": 0.0}])
def test_invalid_fibers(kwargs):
    with pytest.raises(ValueError):
        FiberSpec(FiberKind.SPHERE, **kwargs)


def test_labels():
    assert FiberSpec.sphere(2).label == "S^2(1)"
    assert FiberSpec.torus(3).label == "T^3"
