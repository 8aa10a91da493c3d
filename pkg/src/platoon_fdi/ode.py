"""Generic fixed-step classical Runge-Kutta for small numpy systems."""

from __future__ import annotations

from typing import Callable

import numpy as np


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, y0, t0: float, h: float, nsteps: int) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory ``(t, Y)`` including the initial point."""
    if not h > 0:
        raise ValueError("step must be positive")
    Y = np.empty((nsteps + 1, len(y0)))
    Y[0] = y0
    for n in range(nsteps):
        Y[n + 1] = rk4_step(f, t0 + n * h, Y[n], h)
    return t0 + h * np.arange(nsteps + 1), Y
