import numpy as np
import pytest
import scipy.linalg

from platoon_fdi.dynamics import LinearPlant
from platoon_fdi.graph import build_knn_topology, laplacian_blocks
from platoon_fdi.synthesis import (SynthesisError, care_residual, override_gains, solve_care, solve_care_matrices,
                                   synthesize_gains, verify_riccati_inequality)

from oracles import care_by_eigenvectors

PLANT = LinearPlant(0.4)


def test_scalar_care():
    # A=0, B=1, Q=1 gives X^2 = 1
    assert solve_care_matrices([[0.0]], [[1.0]], [[1.0]]) == pytest.approx(np.array([[1.0]]))


def test_care_against_oracles():
    X = solve_care(PLANT)
    assert care_residual(PLANT, X) < 1e-8
    assert np.all(np.linalg.eigvalsh(X) > 0)
    assert np.allclose(X, care_by_eigenvectors(PLANT.A, PLANT.B, np.eye(3)), atol=1e-9)
    assert np.allclose(X, scipy.linalg.solve_continuous_are(PLANT.A, PLANT.B, np.eye(3), np.eye(1)), atol=1e-9)


def test_scaled_q_still_hurwitz():
    X1, X4 = solve_care(PLANT), solve_care(PLANT, 4 * np.eye(3))
    assert not np.allclose(X1, X4)
    closed = PLANT.A - PLANT.B @ PLANT.B.T @ X4
    assert np.max(np.linalg.eigvals(closed).real) < 0


def test_care_rejects_bad_inputs():
    with pytest.raises(SynthesisError):
        solve_care(PLANT, np.array([[1, 2, 0], [0, 1, 0], [0, 0, 1.0]]))
    with pytest.raises(SynthesisError):
        solve_care_matrices([[1.0, 0], [0, 1.0]], [[1.0], [0.0]], np.eye(2))


def test_synthesize_gains_bounds():
    lam = laplacian_blocks(build_knn_topology(4, 2)).lambda1
    g = synthesize_gains(PLANT, lambda1=lam, gamma=0.006)
    assert g.c1 > 1 / lam and g.c2 > 0.006
    assert np.allclose(g.Gamma, g.K.T @ g.K, atol=1e-12)
    assert np.allclose(g.K, -(PLANT.B.T @ g.P_inv))
    assert verify_riccati_inequality(g.P_inv, PLANT)[0]
    with pytest.raises(SynthesisError):
        synthesize_gains(PLANT, lambda1=0.0)


def test_consensus_region():
    # A + c lambda B K is Hurwitz for every c lambda >= 1/2 with the Riccati gain
    g = synthesize_gains(PLANT)
    for c in (0.5, 1.0, 3.0, 50.0):
        assert np.max(np.linalg.eigvals(PLANT.A + c * PLANT.B @ g.K).real) < 0


def test_riccati_inequality_oracles():
    ok, top = verify_riccati_inequality(np.eye(3), PLANT)
    A, B = PLANT.A, PLANT.B
    assert top == pytest.approx(np.max(np.linalg.eigvalsh(A + A.T - 2 * B @ B.T)))
    assert ok == (top < 0)
    assert not verify_riccati_inequality(1e-6 * solve_care(PLANT), PLANT)[0]


def test_override_gains():
    g = override_gains([-0.7, -1.2, -0.05], 2, 1)
    assert g.source == "override" and g.P_inv is None
    assert np.allclose(g.Gamma, np.outer([-0.7, -1.2, -0.05], [-0.7, -1.2, -0.05]))
    assert "P_inv" not in g.to_dict()
