"""Longitudinal vehicle models.

The nonlinear powertrain model, its feedback-linearizing torque law and the
linear lag model ``x' = A x + B u`` on the state ``x = (p, v, a)`` that the
leader, the followers and the attacker all share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class VehicleState:
    """Position (m), velocity (m/s) and acceleration (m/s^2) of one vehicle."""

    p: float
    v: float
    a: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.p, self.v, self.a])):
            raise ValueError(f"non-finite vehicle state {self!r}")

    def __add__(self, other: "VehicleState") -> "VehicleState":
        return VehicleState.from_array(self.as_array() + as_state(other))

    def __sub__(self, other: "VehicleState") -> "VehicleState":
        return VehicleState.from_array(self.as_array() - as_state(other))

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.v, self.a], dtype=float)

    @classmethod
    def from_array(cls, x) -> "VehicleState":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), float(x[2]))


def as_state(x) -> np.ndarray:
    """Coerce a VehicleState or any 3-sequence to a float array."""
    if isinstance(x, VehicleState):
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"expected a 3-vector state, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PowertrainParams:
    m: float = 1500.0
    C_A: float = 0.5
    g: float = 9.81
    f: float = 0.01
    tau: float = 0.4
    theta_r: float = 0.3
    eta: float = 1.0

    def __post_init__(self):
        if self.m <= 0 or self.tau <= 0 or self.theta_r <= 0:
            raise ValueError("m, tau and theta_r must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.C_A < 0 or self.f < 0:
            raise ValueError("C_A and f must be non-negative")


@dataclass(frozen=True)
class LinearPlant:
    """Triple integrator with first-order actuator lag ``tau``."""

    tau: float = 0.4

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("plant lag tau must be positive")

    @property
    def A(self) -> np.ndarray:
        return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0 / self.tau]])

    @property
    def B(self) -> np.ndarray:
        return np.array([[0.0], [0.0], [1.0 / self.tau]])

    def controllability_rank(self) -> int:
        A, B = self.A, self.B
        ctrb = np.hstack([B, A @ B, A @ A @ B])
        return int(np.linalg.matrix_rank(ctrb))


def lag_deriv(x, u, tau):
    """Arithmetic core of :func:`linear_deriv`; works on arrays in numba too."""
    out = np.empty(3)
    out[0] = x[1]
    out[1] = x[2]
    out[2] = (u - x[2]) / tau
    return out


def linear_deriv(x, u: float, plant: LinearPlant) -> np.ndarray:
    """Return ``A x + B u`` for the lag model."""
    return lag_deriv(as_state(x), float(u), plant.tau)


def feedback_linearization_torque(x, v_dot: float, u: float, params: PowertrainParams) -> float:
    """Desired engine torque that turns the powertrain into ``tau a' + a = u``.

    ``v_dot`` is the acceleration used for the velocity derivative; the
    simulation passes the current acceleration state.
    """
    v = as_state(x)[1]
    P = params
    return (P.C_A * v * (2.0 * P.tau * v_dot + v) + P.m * P.g * P.f + P.m * u) * P.theta_r / P.eta


def nonlinear_deriv(x, T_e: float, params: PowertrainParams) -> np.ndarray:
    """Derivative of ``(p, v, T)`` under the nonlinear powertrain model.

    Here the third state component is the actual engine torque ``T``.
    """
    p, v, T = np.asarray(x, dtype=float)
    P = params
    v_dot = (P.eta * T / P.theta_r - P.C_A * v * v - P.m * P.g * P.f) / P.m
    return np.array([v, v_dot, (T_e - T) / P.tau])


def torque_for_state(x, params: PowertrainParams) -> float:
    """Engine torque consistent with acceleration ``a`` at velocity ``v``."""
    _, v, a = as_state(x)
    P = params
    return (P.m * a + P.C_A * v * v + P.m * P.g * P.f) * P.theta_r / P.eta


def closed_loop_nonlinear_deriv(z, u: float, params: PowertrainParams) -> np.ndarray:
    """Nonlinear model driven by the feedback-linearizing torque for input ``u``."""
    P = params
    p, v, T = z
    a = (P.eta * T / P.theta_r - P.C_A * v * v - P.m * P.g * P.f) / P.m
    T_e = feedback_linearization_torque((p, v, a), a, u, P)
    return nonlinear_deriv(z, T_e, P)


def linearization_gap(u: Callable[[float], float], x0, params: PowertrainParams,
                      horizon: float = 10.0, h: float = 1e-3) -> float:
    """Max deviation of ``(v, a)`` between the feedback-linearized powertrain and the lag model.

    Both systems are integrated with the same RK4 grid from the consistent
    initial condition ``x0 = (p, v, a)``.
    """
    from .ode import rk4_integrate

    x0 = as_state(x0)
    n = int(round(horizon / h))
    plant = LinearPlant(params.tau)
    _, Xl = rk4_integrate(lambda t, x: linear_deriv(x, u(t), plant), x0, 0.0, h, n)
    z0 = np.array([x0[0], x0[1], torque_for_state(x0, params)])
    _, Z = rk4_integrate(lambda t, z: closed_loop_nonlinear_deriv(z, u(t), params), z0, 0.0, h, n)
    P = params
    a_nl = (P.eta * Z[:, 2] / P.theta_r - P.C_A * Z[:, 1] ** 2 - P.m * P.g * P.f) / P.m
    return float(max(np.max(np.abs(Z[:, 1] - Xl[:, 1])), np.max(np.abs(a_nl - Xl[:, 2]))))
