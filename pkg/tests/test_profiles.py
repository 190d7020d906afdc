import math

import numpy as np
import pytest
import sympy as sp

from staticlab.errors import OutOfDomainError
from staticlab.geometry.profiles import ExpressionProfile, OdeSystem, freeze_profiles


def test_expression_profile_derivatives():
    profile = ExpressionProfile("r", "sin(s)")
    assert profile(0.3) == pytest.approx(math.sin(0.3))
    assert profile.derivative(0.3, 2) == pytest.approx(-math.sin(0.3))
    assert profile.derivatives(0.3, 3)[3] == pytest.approx(-math.cos(0.3))


def test_expression_profile_rejects_other_symbols():
    with pytest.raises(ValueError, match="only depend on s"):
        ExpressionProfile("r", "sin(s) + t")


def test_profile_name_must_be_an_identifier():
    with pytest.raises(ValueError):
        ExpressionProfile("not a name", "s")


def test_freeze_profiles_records_derivative_orders():
    s = sp.Symbol("s", real=True)
    r = sp.Function("r")(s)
    frozen, orders = freeze_profiles([r**2 + r.diff(s, 2)], ["r", "b"])
    assert orders == {"r": 2, "b": -1}
    assert frozen[0] == sp.Symbol("r__d0", real=True) ** 2 + sp.Symbol("r__d2", real=True)


@pytest.fixture(scope="module")
def oscillator():
    y, yp = sp.symbols("y yp", real=True)
    system = OdeSystem(("y", "yp"), (yp, -y), name="oscillator")
    return system.solve(0.0, (1.0, 0.0), (-1.0, 2.0))


def test_trajectory_follows_cosine(oscillator):
    for s in (-0.8, 0.0, 1.5):
        assert oscillator.state(s)[0] == pytest.approx(math.cos(s), abs=1e-8)


def test_trajectory_derivatives_along_the_flow(oscillator):
    # y''' = -y' = sin(s) for y = cos(s)
    assert oscillator.derivative(0, 1.0, 3) == pytest.approx(math.sin(1.0), abs=1e-8)
    profile = oscillator.profile("y")
    assert profile.derivative(0.5, 2) == pytest.approx(-math.cos(0.5), abs=1e-8)


def test_trajectory_outside_span(oscillator):
    with pytest.raises(OutOfDomainError):
        oscillator.state(5.0)


def test_ode_with_a_driver_profile():
    f, fp = sp.symbols("f fp", real=True)
    s = OdeSystem.variable
    driver = ExpressionProfile("w", "exp(s)")
    system = OdeSystem(("f", "fp"), (fp, sp.Function("w")(s)), {"w": driver})
    trajectory = system.solve(0.0, (1.0, 1.0), (0.0, 1.0))
    assert trajectory.state(1.0)[0] == pytest.approx(math.e, abs=1e-8)


def test_initial_point_must_lie_in_span():
    y, yp = sp.symbols("y yp", real=True)
    system = OdeSystem(("y", "yp"), (yp, -y))
    with pytest.raises(ValueError):
        system.solve(3.0, (1.0, 0.0), (0.0, 1.0))


def test_sample_covers_span(oscillator):
    grid, states = oscillator.sample(7)
    assert grid[0] == -1.0 and grid[-1] == 2.0
    assert np.allclose(states[:, 0], np.cos(grid), atol=1e-8)
