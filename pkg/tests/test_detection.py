import numpy as np
import pytest
from hypothesis import given, strategies as st

from platoon_fdi.adversary import t5_residual_floor
from platoon_fdi.control import SpacingPolicy
from platoon_fdi.detection import (ResidualTrace, residual, residual_matrix, stealth_verdict, tail_mask,
                                   tracking_error)

SP = SpacingPolicy(20.0)
T = np.arange(0, 200.05, 0.05)


def trace(values):
    return ResidualTrace(T, np.broadcast_to(np.asarray(values, float), (len(T), 2)).copy(), 0.05)


def test_residual_examples():
    x0 = np.array([300.0, 20.0, 0.0])
    assert residual(2, x0 - SP.d(2), [(0, x0), (1, x0 - SP.d(1))], SP) == 0.0
    assert residual(1, x0 - SP.d(1) + (3, 4, 0), [(0, x0)], SP) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        residual(1, x0, [], SP)


def test_residual_under_leader_substitution():
    xa = np.array([120.0, 10.0, 0.02])
    X = [xa] + [xa - SP.d(i) for i in (1, 2, 3, 4)]
    for i in (1, 2):
        assert residual(i, X[i], [(0, xa)] + [(j, X[j]) for j in (1, 2, 3, 4) if 0 < abs(i - j) <= 2], SP) == 0.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.floats(-1e3, 1e3))
def test_residual_translation_invariant(shift3, dp):
    x0 = np.array(shift3)
    base = residual(2, x0 - SP.d(2) + (0.1, 0, 0), [(0, x0), (1, x0 - SP.d(1))], SP)
    sh = np.array([dp, 0.0, 0.0])
    moved = residual(2, x0 + sh - SP.d(2) + (0.1, 0, 0), [(0, x0 + sh), (1, x0 + sh - SP.d(1))], SP)
    assert moved == pytest.approx(base, abs=1e-9)


def test_residual_matrix_matches_scalar():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(4, 3, 3))
    send, recv = np.array([0, 2, 1]), np.array([1, 1, 2])
    rec = rng.normal(size=(4, 3, 3))
    R = residual_matrix(X, rec, send, recv, 2, 20.0)
    for n in range(4):
        assert R[n, 0] == residual(1, X[n, 1], [(0, rec[n, 0]), (2, rec[n, 1])], SP)
        assert R[n, 1] == residual(2, X[n, 2], [(1, rec[n, 2])], SP)


def test_stealth_verdict_examples():
    assert stealth_verdict(trace(1e-5)).all_stealthy
    floor = t5_residual_floor(2, 1, 2, [-0.7, -1.2, -0.05])
    v = stealth_verdict(trace(floor))
    assert not any(v.stealthy) and v.tail_max[0] == pytest.approx(0.35968, abs=1e-5)
    assert stealth_verdict(trace(0.0), settle=0, window=1, eps_stealth=1e-12).all_stealthy
    assert stealth_verdict(trace([1e-5, 2e-3])).stealthy == (True, False)


def test_stealth_verdict_errors():
    with pytest.raises(ValueError):
        stealth_verdict(trace(0.0), window=0)
    with pytest.raises(ValueError):
        stealth_verdict(trace(0.0), settle=190, window=20)
    with pytest.raises(ValueError):
        ResidualTrace(T, -np.ones((len(T), 1)), 0.05)


def test_tail_mask_and_tracking_error():
    assert tail_mask(T, 20).sum() == 401
    assert tracking_error((1, 2, 3), (2, 2, 3), (1, 0, 0)) == 0.0
    assert tracking_error((0, 0.05, 0), (0, 0, 0), (0, 0, 0)) == pytest.approx(0.05)
