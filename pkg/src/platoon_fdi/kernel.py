"""Compiled fixed-step RK4 integrator for the stacked platoon ODE.

State layout of the flat vector ``y``: leader and follower states
``(N+1) x 3`` row-major, then the ``N`` coupling gains, then the attacker
state.  All channel values are recomputed at every Runge-Kutta stage.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import adversary as adv
from .control import sgn_scalar

_sgn = njit(cache=True)(sgn_scalar)
_leader = njit(cache=True)(adv.leader_core)
_forward = njit(cache=True)(adv.forward_core)
_return = njit(cache=True)(adv.return_core)
_dc_forward = njit(cache=True)(adv.dc_forward_core)
_dc_return = njit(cache=True)(adv.dc_return_core)
_t5 = njit(cache=True)(adv.t5_core)

CTRL_DYNAMIC = 0
CTRL_STATIC = 1


@njit(cache=True)
def received_states(t, y, N, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, comp, a_sgn, a_eps, xc, ssub):
    """Fill ``xc`` with the state delivered on every channel at time ``t``.

    For the signum-lifting attack the leader slot of the watched disagreement
    holds the attacker state (``t5_src`` 0) or the true leader state (1).
    """
    C = send.shape[0]
    nx = 3 * (N + 1)
    ia = nx + N
    active = t >= t_start
    if active and has_t5:
        for r in range(N):
            for k in range(3):
                ssub[r, k] = 0.0
        for c in range(C):
            i = recv[c]
            j = send[c]
            for k in range(3):
                if j == 0:
                    src = y[ia + k] if t5_src == 0 else y[k]
                else:
                    src = y[3 * j + k]
                dd = (i - j) * d0 if k == 0 else 0.0
                ssub[i - 1, k] += y[3 * i + k] - src + dd
    for c in range(C):
        i = recv[c]
        j = send[c]
        g = gen[c] if active else 0
        sigma = 0.0
        if g == 7:
            ks = K[0] * ssub[i - 1, 0] + K[1] * ssub[i - 1, 1] + K[2] * ssub[i - 1, 2]
            sigma = _sgn(ks, a_sgn, a_eps)
        for k in range(3):
            xj = y[3 * j + k]
            if g == 0:
                a = 0.0
            elif g == 1:
                a = _leader(y[ia + k], y[k])
            elif g == 2:
                a = _forward(y[ia + k], y[k], off[c, k])
            elif g == 3:
                a = _return(y[ia + k], y[k], off[c, k])
            elif g == 4:
                a = _dc_forward(y[ia + k], xj, off[c, k])
            elif g == 5:
                a = _dc_return(y[ia + k], y[3 * i + k], off[c, k])
            elif g == 6:
                a = off[c, k]
            else:
                a = _t5(y[ia + k], y[k], K[k], comp, sigma)
            xc[c, k] = xj + a


@njit(cache=True)
def controls(t, y, N, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
             tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, xc, ssub, s, u, de):
    """Follower inputs ``u`` and gain rates ``de`` at ``(t, y)``."""
    received_states(t, y, N, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, comp, a_sgn, a_eps, xc, ssub)
    nx = 3 * (N + 1)
    for r in range(N):
        for k in range(3):
            s[r, k] = 0.0
    for c in range(send.shape[0]):
        i = recv[c]
        j = send[c]
        for k in range(3):
            dd = (i - j) * d0 if k == 0 else 0.0
            s[i - 1, k] += y[3 * i + k] - xc[c, k] + dd
    for r in range(N):
        ks = K[0] * s[r, 0] + K[1] * s[r, 1] + K[2] * s[r, 2]
        sg = _sgn(ks, sgn_code, eps)
        if ctrl == CTRL_DYNAMIC:
            e = y[nx + r]
            u[r] = e * ks + e * sg
            quad = 0.0
            for a in range(3):
                for b in range(3):
                    quad += s[r, a] * Gamma[a, b] * s[r, b]
            de[r] = tau_adapt * quad + tau_adapt * abs(ks)
        else:
            u[r] = c1 * ks + c2 * sg
            de[r] = 0.0


@njit(cache=True)
def rhs(t, y, dy, N, tau, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
        tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua, xc, ssub, s, u, de):
    controls(t, y, N, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
             tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, xc, ssub, s, u, de)
    nx = 3 * (N + 1)
    ia = nx + N
    lead_u = u0[0] * np.sin(u0[2] * t) + u0[1] * np.cos(u0[2] * t)
    att_u = ua[0] * np.sin(ua[2] * t) + ua[1] * np.cos(ua[2] * t)
    for v in range(N + 1):
        uv = lead_u if v == 0 else u[v - 1]
        dy[3 * v] = y[3 * v + 1]
        dy[3 * v + 1] = y[3 * v + 2]
        dy[3 * v + 2] = (uv - y[3 * v + 2]) / tau
    for r in range(N):
        dy[nx + r] = de[r]
    dy[ia] = y[ia + 1]
    dy[ia + 1] = y[ia + 2]
    dy[ia + 2] = (att_u - y[ia + 2]) / tau


@njit(cache=True)
def integrate(y0, t0, h, nsteps, every, N, tau, send, recv, gen, off, d0, t_start, has_t5, t5_src, K, Gamma,
              ctrl, c1, c2, tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua):
    """Classical RK4 from ``t0``; samples every ``every`` steps including the start.

    Returns ``(Y, U, XC, failed_step, y_last)``; ``failed_step`` is -1 on
    success or the index of the first step that produced a non-finite state.
    """
    n = y0.shape[0]
    C = send.shape[0]
    S = nsteps // every + 1
    Y = np.zeros((S, n))
    U = np.zeros((S, N + 1))
    XC = np.zeros((S, C, 3))
    xc = np.zeros((C, 3))
    ssub = np.zeros((N, 3))
    s = np.zeros((N, 3))
    u = np.zeros(N)
    de = np.zeros(N)
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    k3 = np.zeros(n)
    k4 = np.zeros(n)
    tmp = np.zeros(n)
    y = y0.copy()
    half = 0.5 * h
    sixth = h / 6.0
    # stage times within 1e-9 h of the onset count as attacked
    t_on = t_start - 1e-9 * h
    slot = 0
    for step in range(nsteps + 1):
        t = t0 + step * h
        if step % every == 0:
            controls(t, y, N, send, recv, gen, off, d0, t_on, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
                     tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, xc, ssub, s, u, de)
            Y[slot] = y
            U[slot, 0] = u0[0] * np.sin(u0[2] * t) + u0[1] * np.cos(u0[2] * t)
            for r in range(N):
                U[slot, r + 1] = u[r]
            XC[slot] = xc
            slot += 1
        if step == nsteps:
            break
        rhs(t, y, k1, N, tau, send, recv, gen, off, d0, t_on, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
            tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua, xc, ssub, s, u, de)
        for q in range(n):
            tmp[q] = y[q] + half * k1[q]
        rhs(t + half, tmp, k2, N, tau, send, recv, gen, off, d0, t_on, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
            tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua, xc, ssub, s, u, de)
        for q in range(n):
            tmp[q] = y[q] + half * k2[q]
        rhs(t + half, tmp, k3, N, tau, send, recv, gen, off, d0, t_on, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
            tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua, xc, ssub, s, u, de)
        for q in range(n):
            tmp[q] = y[q] + h * k3[q]
        rhs(t + h, tmp, k4, N, tau, send, recv, gen, off, d0, t_on, has_t5, t5_src, K, Gamma, ctrl, c1, c2,
            tau_adapt, sgn_code, eps, comp, a_sgn, a_eps, u0, ua, xc, ssub, s, u, de)
        acc = 0.0
        for q in range(n):
            y[q] = y[q] + sixth * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
            acc += y[q]
        if not np.isfinite(acc):
            return Y[:slot], U[:slot], XC[:slot], step, y
    return Y, U, XC, -1, y
