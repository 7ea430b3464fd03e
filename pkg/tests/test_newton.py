import numpy as np
import pytest

from grsaa.newton import NewtonFailure, damped_newton


def test_solves_scalar_quadratic():
    x = damped_newton(lambda v: v * v - 2.0, lambda v: np.diag(2.0 * v),
                      np.array([1.0]), tol=1e-14)
    assert x[0] == pytest.approx(np.sqrt(2.0), abs=1e-14)


def test_solves_coupled_system():
    def F(v):
        return np.array([v[0] + v[1] - 3.0, v[0] * v[1] - 2.0])

    def J(v):
        return np.array([[1.0, 1.0], [v[1], v[0]]])

    x = damped_newton(F, J, np.array([2.5, 0.5]), tol=1e-13)
    assert np.allclose(sorted(x), [1.0, 2.0], atol=1e-12)


def test_damping_rescues_overshoot():
    # full steps on atan from a far start diverge; backtracking converges
    x = damped_newton(lambda v: np.arctan(v),
                      lambda v: np.diag(1.0 / (1.0 + v * v)),
                      np.array([10.0]), tol=1e-12)
    assert abs(x[0]) <= 1e-12


def test_singular_jacobian_raises():
    with pytest.raises(NewtonFailure, match="singular"):
        damped_newton(lambda v: v - 1.0, lambda v: np.zeros((1, 1)),
                      np.array([0.0]))


def test_iteration_budget_raises():
    with pytest.raises(NewtonFailure):
        damped_newton(lambda v: np.arctan(v),
                      lambda v: np.diag(1.0 / (1.0 + v * v)),
                      np.array([50.0]), tol=1e-12, max_iter=2)
