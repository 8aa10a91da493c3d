"""Residual generation and stealthiness verdicts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .control import SpacingPolicy
from .dynamics import as_state

DEFAULT_SETTLE = 60.0
DEFAULT_WINDOW = 20.0
DEFAULT_EPS_STEALTH = 1e-3


def _norm3(v) -> float:
    return float(np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))


def residual(i: int, x_i, received: Sequence[tuple[int, object]], spacing: SpacingPolicy) -> float:
    """Sum over neighbours of ``||x_i - x_j^c + d_ij||``; the leader enters as ``j = 0``."""
    if not received:
        raise ValueError(f"follower {i} has no neighbours")
    x_i = as_state(x_i)
    total = 0.0
    for j, x_j in received:
        total += _norm3(x_i - as_state(x_j) + spacing.d_pair(i, j))
    return total


def residual_matrix(X: np.ndarray, received: np.ndarray, send: np.ndarray, recv: np.ndarray,
                    N: int, d0: float) -> np.ndarray:
    """Residuals for every sample at once.

    ``X`` is ``(T, N+1, 3)``, ``received`` holds the corrupted state on each
    channel ``(T, C, 3)``.  Channel terms are accumulated in channel order,
    matching :func:`residual` applied receiver by receiver.
    """
    T = X.shape[0]
    out = np.zeros((T, N))
    for c in range(len(send)):
        i, j = int(recv[c]), int(send[c])
        F = X[:, i, :] - received[:, c, :]
        F[:, 0] += (i - j) * d0
        out[:, i - 1] += np.sqrt(F[:, 0] * F[:, 0] + F[:, 1] * F[:, 1] + F[:, 2] * F[:, 2])
    return out


@dataclass(frozen=True)
class ResidualTrace:
    t: np.ndarray
    r: np.ndarray  # (samples, N)
    sample_period: float

    def __post_init__(self):
        if np.any(self.r < 0):
            raise ValueError("residuals must be non-negative")


@dataclass(frozen=True)
class StealthVerdict:
    stealthy: tuple[bool, ...]
    tail_max: tuple[float, ...]
    window: float
    eps_stealth: float
    settle: float

    @property
    def all_stealthy(self) -> bool:
        return all(self.stealthy)

    def to_dict(self) -> dict:
        return {
            "stealthy": list(self.stealthy),
            "tail_max": list(self.tail_max),
            "window": self.window,
            "eps_stealth": self.eps_stealth,
            "settle": self.settle,
        }


def tail_mask(t: np.ndarray, window: float) -> np.ndarray:
    return t >= t[-1] - window - 1e-9


def stealth_verdict(trace: ResidualTrace, settle: float = DEFAULT_SETTLE, window: float = DEFAULT_WINDOW,
                    eps_stealth: float = DEFAULT_EPS_STEALTH) -> StealthVerdict:
    """Per-vehicle verdict: stealthy iff the tail-window maximum stays below ``eps_stealth``."""
    if window <= 0:
        raise ValueError("tail window must be positive")
    duration = trace.t[-1] - trace.t[0]
    if duration <= settle + window:
        raise ValueError(f"trace of {duration:g} s is too short for settle {settle:g} s + window {window:g} s")
    tail = trace.r[tail_mask(trace.t, window)]
    peak = tail.max(axis=0)
    return StealthVerdict(
        stealthy=tuple(bool(p < eps_stealth) for p in peak),
        tail_max=tuple(float(p) for p in peak),
        window=window,
        eps_stealth=eps_stealth,
        settle=settle,
    )


def tracking_error(x_i, ref, offset) -> float:
    """``||x_i - ref + offset||``."""
    return float(np.linalg.norm(as_state(x_i) - as_state(ref) + as_state(offset)))
