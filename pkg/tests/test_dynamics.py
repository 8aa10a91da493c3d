import numpy as np
import pytest
from hypothesis import given, strategies as st

from platoon_fdi.dynamics import (LinearPlant, PowertrainParams, VehicleState, closed_loop_nonlinear_deriv,
                                  feedback_linearization_torque, linear_deriv, linearization_gap,
                                  nonlinear_deriv, torque_for_state)
from platoon_fdi.ode import rk4_integrate

from oracles import lag_step_response

finite = st.floats(-1e3, 1e3, allow_nan=False)
PLANT = LinearPlant(0.4)
P = PowertrainParams()


def test_vehicle_state_arithmetic():
    a, b = VehicleState(1, 2, 3), VehicleState(0.5, -1, 2)
    assert (a + b).as_array().tolist() == [1.5, 1.0, 5.0]
    assert (a - b).as_array().tolist() == [0.5, 3.0, 1.0]
    with pytest.raises(ValueError):
        VehicleState(float("nan"), 0, 0)


@pytest.mark.parametrize("kw", [dict(m=0), dict(tau=0), dict(theta_r=-1), dict(eta=1.5), dict(C_A=-1), dict(f=-0.1)])
def test_powertrain_params_rejected(kw):
    with pytest.raises(ValueError):
        PowertrainParams(**kw)


def test_plant_structure():
    assert np.array_equal(PLANT.A, [[0, 1, 0], [0, 0, 1], [0, 0, -2.5]])
    assert np.array_equal(PLANT.B.ravel(), [0, 0, 2.5])
    assert PLANT.controllability_rank() == 3


@pytest.mark.parametrize("x,u,expected", [
    ((0, 0, 0), 0.0, (0, 0, 0)),
    ((100, 20, 0.5), 0.5, (20, 0.5, 0)),
    ((0, 0, 1), 0.0, (0, 1, -2.5)),
])
def test_linear_deriv_examples(x, u, expected):
    assert np.allclose(linear_deriv(x, u, PLANT), expected, atol=1e-15)


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3), finite, finite,
       st.floats(-5, 5), st.floats(-5, 5))
def test_linear_deriv_is_linear(x1, x2, u1, u2, alpha, beta):
    lhs = linear_deriv(alpha * np.array(x1) + beta * np.array(x2), alpha * u1 + beta * u2, PLANT)
    rhs = alpha * linear_deriv(x1, u1, PLANT) + beta * linear_deriv(x2, u2, PLANT)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_linear_deriv_matches_matrix_form():
    x, u = np.array([3.0, -2.0, 0.7]), 1.3
    assert np.allclose(linear_deriv(x, u, PLANT), PLANT.A @ x + PLANT.B.ravel() * u, atol=1e-15)


def test_torque_examples():
    assert feedback_linearization_torque((0, 0, 0), 0.0, 0.0, P) == pytest.approx(44.145, abs=1e-12)
    assert feedback_linearization_torque((0, 20, 0), 0.0, 0.0, P) == pytest.approx(104.145, abs=1e-12)
    args = ((0, 13.0, 0.4), 0.4, 0.8)
    doubled = PowertrainParams(theta_r=2 * P.theta_r)
    assert feedback_linearization_torque(*args, doubled) == pytest.approx(2 * feedback_linearization_torque(*args, P))


def test_nonlinear_deriv_examples():
    v = 12.0
    T = (P.C_A * v * v + P.m * P.g * P.f) * P.theta_r / P.eta
    d = nonlinear_deriv((0, v, T), T, P)
    assert d[1] == pytest.approx(0.0, abs=1e-12) and d[2] == pytest.approx(0.0, abs=1e-12)
    assert nonlinear_deriv((0, 20, 0), 0.0, P)[1] == pytest.approx(-(0.5 * 400 + 147.15) / 1500, abs=1e-12)


def test_feedback_linearization_exact_lag():
    # with the linearizing torque the torque-implied acceleration obeys tau a' + a = u
    z = np.array([0.0, 17.0, torque_for_state((0, 17.0, 0.3), P)])
    dz = closed_loop_nonlinear_deriv(z, 1.1, P)
    a = 0.3
    # a' from the chain rule on a(v, T)
    a_dot = (P.eta * dz[2] / P.theta_r - 2 * P.C_A * z[1] * dz[1]) / P.m
    assert P.tau * a_dot + a == pytest.approx(1.1, rel=1e-12)


def test_linearization_equivalence_constant_input():
    assert linearization_gap(lambda t: 0.7, (0, 20, 0), P, horizon=10.0) < 1e-8


def test_acceleration_decay_and_step_response():
    t, Y = rk4_integrate(lambda t, x: linear_deriv(x, 0.0, PLANT), np.array([0, 0, 1.0]), 0.0, 1e-3, 2000)
    assert np.allclose(Y[:, 2], np.exp(-t / 0.4), atol=1e-10)
    t, Y = rk4_integrate(lambda t, x: linear_deriv(x, 2.0, PLANT), np.zeros(3), 0.0, 1e-3, 1000)
    assert abs(Y[-1, 2] - lag_step_response(1.0, 2.0, 0.4)) < 1e-8
