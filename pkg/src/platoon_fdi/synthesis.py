"""Offline gain design for the distributed tracking controllers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import LinearPlant

RICCATI_TOL = -1e-9
DEFAULT_MARGIN = 1.1


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class GainSet:
    """Feedback and coupling gains.

    ``P_inv`` is ``None`` when ``K`` was supplied directly rather than
    synthesized; ``Gamma`` is then ``K^T K``.
    """

    K: np.ndarray
    Gamma: np.ndarray
    c1: float | None = None
    c2: float | None = None
    P_inv: np.ndarray | None = None
    source: str = "synthesized"

    def to_dict(self) -> dict:
        out = {
            "source": self.source,
            "K": self.K.ravel().tolist(),
            "Gamma": self.Gamma.tolist(),
            "c1": self.c1,
            "c2": self.c2,
        }
        if self.P_inv is not None:
            out["P_inv"] = self.P_inv.tolist()
        return out


def solve_care(plant: LinearPlant, Q=None) -> np.ndarray:
    """Stabilizing solution of ``A^T X + X A - X B B^T X + Q = 0``.

    The returned ``X`` plays the role of ``P^{-1}`` in the Riccati
    inequality ``A P + P A^T - 2 B B^T < 0``.
    """
    return solve_care_matrices(plant.A, plant.B, np.eye(3) if Q is None else Q)


def solve_care_matrices(A, B, Q) -> np.ndarray:
    """Hamiltonian stable-subspace CARE solver for explicit matrices.

    The stable invariant subspace is extracted with an ordered real Schur
    decomposition.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    if Q.shape != (n, n) or not np.allclose(Q, Q.T):
        raise SynthesisError(f"Q must be a symmetric {n}x{n} matrix")
    H = np.block([[A, -B @ B.T], [-Q, -A.T]])
    ev = np.linalg.eigvals(H)
    if np.min(np.abs(ev.real)) < 1e-10 * max(1.0, np.max(np.abs(ev))):
        raise SynthesisError("Hamiltonian has eigenvalues on the imaginary axis; (A, B) not stabilizable")
    T, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise SynthesisError(f"stable subspace has dimension {sdim}, expected {n}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        raise SynthesisError("stable subspace is not a graph; (A, B) not stabilizable")
    X = np.linalg.solve(U1.T, U2.T).T
    X = 0.5 * (X + X.T)
    R = A.T @ X + X @ A - X @ B @ B.T @ X + Q
    if np.linalg.norm(R, "fro") > 1e-8 * max(1.0, np.linalg.norm(X)):
        raise SynthesisError(f"Riccati residual {np.linalg.norm(R):.3e} too large")
    return X


def care_residual(plant: LinearPlant, X, Q=None) -> float:
    A, B = plant.A, plant.B
    Q = np.eye(3) if Q is None else np.asarray(Q, dtype=float)
    R = A.T @ X + X @ A - X @ B @ B.T @ X + Q
    return float(np.linalg.norm(R, "fro"))


def verify_riccati_inequality(P_inv, plant: LinearPlant) -> tuple[bool, float]:
    """Check ``A P + P A^T - 2 B B^T`` is negative definite for ``P = P_inv^{-1}``."""
    P_inv = np.asarray(P_inv, dtype=float)
    if np.linalg.cond(P_inv) > 1e14:
        raise SynthesisError("P_inv is singular")
    P = np.linalg.inv(P_inv)
    A, B = plant.A, plant.B
    M = A @ P + P @ A.T - 2.0 * B @ B.T
    top = float(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))))
    return top < RICCATI_TOL, top


def synthesize_gains(plant: LinearPlant, Q=None, lambda1: float = 1.0, gamma: float = 0.0,
                     margin: float = DEFAULT_MARGIN) -> GainSet:
    """Riccati-based ``K``, ``Gamma`` and static couplings ``c1``, ``c2``.

    The static gains take ``margin`` times their lower bounds ``1/lambda1``
    and ``gamma``.
    """
    if not lambda1 > 0:
        raise SynthesisError(f"lambda1={lambda1} must be positive (leader must reach every follower)")
    if gamma < 0:
        raise SynthesisError("gamma must be non-negative")
    if margin <= 1:
        raise SynthesisError("margin must exceed 1 to keep the bounds strict")
    P_inv = solve_care(plant, Q)
    K = -(plant.B.T @ P_inv)
    Gamma = P_inv @ plant.B @ plant.B.T @ P_inv
    ok, top = verify_riccati_inequality(P_inv, plant)
    if not ok:
        raise SynthesisError(f"Riccati inequality violated (max eigenvalue {top:.3e})")
    return GainSet(K=K, Gamma=Gamma, c1=margin / lambda1, c2=margin * gamma, P_inv=P_inv)


def override_gains(K, c1: float | None = None, c2: float | None = None) -> GainSet:
    """Gain set for a directly supplied ``K``."""
    K = np.asarray(K, dtype=float).reshape(1, 3)
    return GainSet(K=K, Gamma=K.T @ K, c1=c1, c2=c2, P_inv=None, source="override")
