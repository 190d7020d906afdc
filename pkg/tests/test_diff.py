import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from staticlab.geometry.diff import DiffEngine, DiffMode

coefficient = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(st.lists(coefficient, min_size=4, max_size=4))
def test_gradient_is_exact_on_cubics(c):
    engine = DiffEngine(DiffMode.FINITE_DIFFERENCE)

    def fn(x):
        return np.asarray(c[0] * x[0] ** 3 + c[1] * x[0] * x[1] ** 2 + c[2] * x[1] + c[3])

    x = np.array([0.4, -0.7])
    expected = np.array(
        [3 * c[0] * x[0] ** 2 + c[1] * x[1] ** 2, 2 * c[1] * x[0] * x[1] + c[2]]
    )
    assert np.allclose(engine.gradient(fn, x), expected, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(coefficient, min_size=3, max_size=3))
def test_hessian_is_exact_on_quadratics(c):
    engine = DiffEngine(DiffMode.FINITE_DIFFERENCE)

    def fn(x):
        return np.asarray(c[0] * x[0] ** 2 + c[1] * x[0] * x[1] + c[2] * x[1] ** 2)

    expected = np.array([[2 * c[0], c[1]], [c[1], 2 * c[2]]])
    assert np.allclose(engine.hessian(fn, np.array([0.3, 0.1])), expected, atol=1e-5)


def test_derivative_index_comes_first():
    engine = DiffEngine(DiffMode.FINITE_DIFFERENCE)

    def fn(x):
        return np.array([[x[0], x[1]], [x[0] * x[1], 1.0]])

    grad = engine.gradient(fn, np.array([2.0, 3.0]))
    assert grad.shape == (2, 2, 2)
    assert np.allclose(grad[0], [[1.0, 0.0], [3.0, 0.0]])
    assert np.allclose(grad[1], [[0.0, 1.0], [2.0, 0.0]])


def test_third_derivatives_of_a_cubic():
    engine = DiffEngine(DiffMode.FINITE_DIFFERENCE)
    third = engine.third(lambda x: np.asarray(x[0] ** 2 * x[1]), np.array([0.5, 0.5]))
    # d^3/dx0 dx0 dx1 = 2 in every ordering
    for index in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
        assert third[index] == pytest.approx(2.0, abs=1e-5)
    assert third[1, 1, 1] == pytest.approx(0.0, abs=1e-5)


def test_tensor_step_depends_on_mode():
    assert DiffEngine(DiffMode.ANALYTIC).tensor_step == 1e-3
    assert DiffEngine(DiffMode.FINITE_DIFFERENCE).tensor_step == 1e-2
    assert DiffEngine(field_step=5e-3).tensor_step == 5e-3


@pytest.mark.parametrize(
    "kwargs",
    [{"stencil_order": 3}, {"step": 0.0}, {"third_order_step": -1.0}, {"field_step": 0.0}],
)
def test_invalid_engine_settings(kwargs):
    with pytest.raises(ValueError):
        DiffEngine(**kwargs)
