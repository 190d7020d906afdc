import math

import numpy as np
import pytest

from staticlab.errors import PreconditionError
from staticlab.geometry.fibers import FiberKind
from staticlab.kobayashi import (
    TRAJECTORY_COLUMNS,
    OdeState,
    build_catalog,
    effective_potential,
    fiber_for,
    find_periodic_warp,
    first_integrals,
    integrate,
    periodic_warp_model,
)
from staticlab.statics import ModelKind, vacuum_static_residual


def test_effective_potential_well():
    potential = effective_potential(3, 6.0, 0.9)
    assert potential.has_well
    assert potential.center == pytest.approx(0.9 ** (1 / 3))
    assert potential.small_period == pytest.approx(2 * math.pi / math.sqrt(3))
    assert potential(1.0) == pytest.approx(2.8)
    assert potential.depth == pytest.approx(potential(potential.center))
    assert "well at" in potential.describe()


@pytest.mark.parametrize(("R", "a"), [(6.0, 0.0), (6.0, -0.5), (-6.0, 1.0), (0.0, 1.0)])
def test_no_well_without_positive_r_and_a(R, a):
    potential = effective_potential(3, R, a)
    assert not potential.has_well
    assert "no well" in potential.describe()


def test_first_integrals_from_a_state():
    state = OdeState(0.0, 1.0, 0.5, 2.0, 1.0, 3, 6.0)
    integrals = first_integrals(state)
    # r'' = r' f'/f = 1/4, c = 1
    assert integrals.a == pytest.approx(1.25)
    assert integrals.k == pytest.approx(3.75)
    assert first_integrals(state, r_second=0.0).a == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kwargs",
    [{"n": 2}, {"r": 0.0}, {"r": -1.0}],
)
def test_invalid_states(kwargs):
    values = {"s": 0.0, "r": 1.0, "r_prime": 0.0, "f": 1.0, "f_prime": 0.0, "n": 3, "R": 6.0}
    with pytest.raises(PreconditionError):
        OdeState(**(values | kwargs))


def test_second_derivative_needs_nonzero_f():
    with pytest.raises(PreconditionError):
        first_integrals(OdeState(0.0, 1.0, 0.0, 0.0, 1.0, 3, 6.0))


def test_integration_reads_a_off_the_state():
    solution = integrate(OdeState(0.0, 1.0, 0.5, 2.0, 1.0, 3, 6.0), (0.0, 0.5))
    assert solution.system.a == pytest.approx(1.25)
    assert solution.k == pytest.approx(3.75)
    assert not solution.collapsed
    rows = solution.rows(5)
    assert len(rows) == 5
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS


def test_round_sphere_warp_collapses():
    # a = 0 and R = 6 give r = cos(s), which reaches zero at pi/2
    solution = integrate(OdeState(0.0, 1.0, 0.0, 0.0, -1.0, 3, 6.0), (0.0, 3.0), a=0.0)
    assert solution.collapsed
    assert solution.span[1] == pytest.approx(math.pi / 2, abs=1e-4)


def test_periodic_warp(periodic_warp):
    assert not periodic_warp.constant
    assert periodic_warp.closure < 1e-8
    assert periodic_warp.k == pytest.approx(2.8, abs=1e-12)
    assert periodic_warp.solution.drift_ok()
    assert periodic_warp.solution.proportionality_residual() < 1e-8
    trajectory = periodic_warp.solution.trajectory
    assert trajectory.state(periodic_warp.period / 2)[1] == pytest.approx(0.0, abs=1e-8)


def test_no_periodic_warp_without_a_well():
    assert find_periodic_warp(3, 6.0, 0.0) is None
    with pytest.raises(PreconditionError):
        find_periodic_warp(3, -6.0, 0.9)


def test_constant_warp_at_the_well_center():
    center = 0.9 ** (1 / 3)
    warp = find_periodic_warp(3, 6.0, 0.9, r0=center)
    assert warp is not None
    assert warp.constant
    assert warp.period == pytest.approx(2 * math.pi / math.sqrt(3))
    assert warp.closure < 1e-8
    with pytest.raises(PreconditionError):
        warp.solution.proportionality_residual()


@pytest.mark.parametrize(
    ("n", "k", "product", "kind", "radius"),
    [
        (3, 1.0, False, FiberKind.SPHERE, 1.0),
        (5, 5 / 3, True, FiberKind.SPHERE_PRODUCT, 1 / math.sqrt(5)),
        (3, -0.6, False, FiberKind.HYPERBOLIC, math.sqrt(1 / 0.6)),
        (3, 0.0, False, FiberKind.TORUS, 1.0),
    ],
)
def test_fiber_for(n, k, product, kind, radius):
    fiber = fiber_for(n, k, product)
    assert fiber.kind is kind
    assert fiber.dimension == n - 1
    assert fiber.radius == pytest.approx(radius)
    assert fiber.einstein_constant == pytest.approx((n - 2) * k)


def test_periodic_warp_model_is_vacuum_static(periodic_warp):
    model = periodic_warp_model(periodic_warp, "periodic")
    assert model.kind is ModelKind.VACUUM_STATIC
    assert model.metric.chart.is_periodic(0)
    x = model.metric.warp.point(periodic_warp.period / 5)
    assert vacuum_static_residual(model.metric, model.f, x).max_abs() < 1e-6


def test_catalog_closed_form_entries_certify():
    entries = build_catalog(["s3", "s1xs2", "flat_t3"])
    assert [entry.name for entry in entries] == ["s3", "s1xs2", "flat_t3"]
    for entry in entries:
        assert entry.certification is not None
        assert entry.certification.passed(), entry.to_record()
        assert entry.to_record()["passed"] is True
    s3, s1xs2, _ = entries
    assert s3.slice_constant == pytest.approx(1.0)
    assert s1xs2.slice_constant == pytest.approx(1.0)
    assert s1xs2.scalar_curvature == 2.0


def test_catalog_rejects_unknown_entries():
    with pytest.raises(PreconditionError, match="Unknown catalog entries"):
        build_catalog(["s7"])


def test_uncertified_catalog_entry_has_no_verdict():
    (entry,) = build_catalog(["s4"], certified=False)
    assert entry.certification is None
    assert "passed" not in entry.to_record()
    assert entry.dimension == 4
    assert np.isclose(entry.slice_constant, 2.0)


@pytest.mark.slow
def test_periodic_catalog_entry_certifies():
    (entry,) = build_catalog(["periodic_r3"])
    assert entry.certification.passed(), entry.to_record()
    assert entry.slice_constant == pytest.approx(2.8, abs=1e-10)
