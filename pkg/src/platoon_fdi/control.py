"""Distributed tracking control laws evaluated on received neighbour states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import as_state

SGN_EXACT = 0
SGN_BOUNDARY = 1


@dataclass(frozen=True)
class SpacingPolicy:
    """Constant spacing: follower ``i`` sits ``i * d0`` behind the leader."""

    d0: float = 20.0

    def d(self, i: int) -> np.ndarray:
        return np.array([i * self.d0, 0.0, 0.0])

    def d_pair(self, i: int, j: int) -> np.ndarray:
        return np.array([(i - j) * self.d0, 0.0, 0.0])

    def d_local(self, jc: int) -> np.ndarray:
        """Offset behind the attacker for local rank ``jc``."""
        return self.d(jc)


@dataclass(frozen=True)
class SignumMode:
    mode: str = "boundary"
    eps: float = 1e-3

    def __post_init__(self):
        if self.mode not in ("exact", "boundary"):
            raise ValueError(f"unknown signum mode {self.mode!r}")
        if self.mode == "boundary" and not self.eps > 0:
            raise ValueError("boundary-layer width must be positive")

    @property
    def code(self) -> int:
        return SGN_EXACT if self.mode == "exact" else SGN_BOUNDARY


def sgn_scalar(s, code, eps):
    """Signum (``code`` 0) or boundary-layer surrogate ``s / (|s| + eps)``."""
    if code == SGN_EXACT:
        if s > 0.0:
            return 1.0
        if s < 0.0:
            return -1.0
        return 0.0
    return s / (abs(s) + eps)


def sgn_impl(s: float, mode: SignumMode | str = "exact", eps: float | None = None) -> float:
    if isinstance(mode, str):
        mode = SignumMode(mode, 1e-3 if eps is None else eps)
    return sgn_scalar(float(s), mode.code, mode.eps)


def disagreement(i: int, x_i, received: Sequence[tuple[int, object]], spacing: SpacingPolicy) -> np.ndarray:
    """Sum of formation errors ``x_i - x_j^c + d_ij`` over the received states."""
    if not received:
        raise ValueError(f"follower {i} has no neighbours")
    x_i = as_state(x_i)
    s = np.zeros(3)
    for j, x_j in received:
        s += x_i - as_state(x_j) + spacing.d_pair(i, j)
    return s


def _ks(s, K) -> float:
    return float(np.asarray(K, dtype=float).reshape(3) @ as_state(s))


def dynamic_control(s_i, e_i: float, K, mode: SignumMode | str = "exact") -> float:
    y = _ks(s_i, K)
    return e_i * y + e_i * sgn_impl(y, mode)


def coupling_gain_deriv(s_i, Gamma, K, tau_adapt: float = 1.0) -> float:
    s = as_state(s_i)
    return tau_adapt * float(s @ np.asarray(Gamma, dtype=float) @ s) + tau_adapt * abs(_ks(s, K))


def static_control(s_i, c1: float, c2: float, K, mode: SignumMode | str = "exact") -> float:
    y = _ks(s_i, K)
    return c1 * y + c2 * sgn_impl(y, mode)


def lyapunov_value(zeta: np.ndarray, e: np.ndarray, L1: np.ndarray, P_inv: np.ndarray,
                   alpha: float, tau_adapt: float) -> float:
    """``zeta^T (L1 kron P_inv) zeta + sum (e_i - alpha)^2 / tau_adapt``.

    ``zeta`` is the stacked ``N x 3`` tracking error ``x_i - x_0 + d_i``.
    """
    z = np.asarray(zeta, dtype=float).reshape(-1)
    quad = float(z @ np.kron(L1, P_inv) @ z)
    return quad + float(np.sum((np.asarray(e) - alpha) ** 2)) / tau_adapt
