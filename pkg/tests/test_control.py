import numpy as np
import pytest
from hypothesis import given, strategies as st

from platoon_fdi.control import (SignumMode, SpacingPolicy, coupling_gain_deriv, disagreement, dynamic_control,
                                 lyapunov_value, sgn_impl, static_control)

SP = SpacingPolicy(20.0)
K = np.array([-0.7, -1.2, -0.05])


def s_with_ks(target):
    # a disagreement vector whose projection on K equals ``target``
    return K * target / float(K @ K)


def test_disagreement_examples():
    x0 = np.array([200.0, 20.0, 0.1])
    formation = {j: x0 - SP.d(j) for j in range(5)}
    assert np.allclose(disagreement(2, formation[2], [(0, x0), (1, formation[1]), (3, formation[3])], SP), 0)
    assert np.allclose(disagreement(2, (160, 20, 0), [(1, (180, 20, 0))], SP), 0)
    shifted = [(1, formation[1] - (1, 0, 0)), (3, formation[3] - (1, 0, 0))]
    assert np.allclose(disagreement(2, formation[2], shifted, SP), (2, 0, 0))
    with pytest.raises(ValueError):
        disagreement(1, x0, [], SP)


def test_control_examples():
    assert dynamic_control(np.zeros(3), 3.0, K) == 0.0
    assert dynamic_control(s_with_ks(-3.0), 2.0, K) == pytest.approx(-8.0)
    assert coupling_gain_deriv(np.zeros(3), np.outer(K, K), K) == 0.0
    assert coupling_gain_deriv(s_with_ks(2.0), np.outer(K, K), K, 1.0) == pytest.approx(6.0)
    assert static_control(np.zeros(3), 2, 1, K) == 0.0
    assert static_control(s_with_ks(0.5), 2, 1, K) == pytest.approx(2.0)


def test_signum():
    assert [sgn_impl(x) for x in (-2.0, 0.0, 3.0)] == [-1.0, 0.0, 1.0]
    assert sgn_impl(1e-3, "boundary", 1e-3) == pytest.approx(0.5)
    a, b = -0.3, 2.0
    assert sgn_impl(a + b * sgn_impl(a)) == sgn_impl(a) == -1.0
    with pytest.raises(ValueError):
        SignumMode("boundary", 0.0)
    with pytest.raises(ValueError):
        SignumMode("tanh")


@given(st.floats(-1e6, 1e6), st.floats(1e-6, 1.0))
def test_boundary_layer_bounded_and_odd(s, eps):
    v = sgn_impl(s, "boundary", eps)
    assert abs(v) < 1.0 and sgn_impl(-s, "boundary", eps) == -v


@given(st.floats(-10, 10), st.floats(0.01, 10))
def test_gain_derivative_non_negative(ks, tau):
    assert coupling_gain_deriv(s_with_ks(ks), np.outer(K, K), K, tau) >= 0


def test_lyapunov_value():
    L1 = np.array([[2.0, -1.0], [-1.0, 1.0]])
    assert lyapunov_value(np.zeros((2, 3)), np.array([3.0, 3.0]), L1, np.eye(3), 3.0, 1.0) == 0.0
    z = np.array([[1.0, 0, 0], [0, 0, 0]])
    assert lyapunov_value(z, np.array([4.0, 3.0]), L1, np.eye(3), 3.0, 2.0) == pytest.approx(2.0 + 0.5)
