"""Independent reference computations used to check the library."""

from __future__ import annotations

import numpy as np

from platoon_fdi.adversary import (apply_fdi, attack_t1, attack_t2_forward, attack_t2_return,
                                   attack_t3_pair_disconnected, attack_t5)
from platoon_fdi.control import (coupling_gain_deriv, disagreement, dynamic_control, static_control,
                                 SignumMode)
from platoon_fdi.dynamics import linear_deriv


def care_by_eigenvectors(A, B, Q) -> np.ndarray:
    """Stabilizing CARE solution from the stable eigenvectors of the Hamiltonian."""
    n = A.shape[0]
    H = np.block([[A, -B @ B.T], [-Q, -A.T]])
    w, V = np.linalg.eig(H)
    stable = V[:, w.real < 0]
    assert stable.shape[1] == n
    X = np.real(stable[n:] @ np.linalg.inv(stable[:n]))
    return 0.5 * (X + X.T)


def lag_step_response(t, c, tau):
    """Acceleration of ``tau a' + a = c`` from rest."""
    return c * (1.0 - np.exp(-t / tau))


def brute_residual(X_t, received_t, channels, d0):
    """Residual of every follower from one sample, summed channel by channel."""
    N = X_t.shape[0] - 1
    r = [0.0] * N
    for n, (j, i) in enumerate(channels):
        diff = X_t[i] - received_t[n]
        diff = diff + np.array([(i - j) * d0, 0.0, 0.0])
        r[i - 1] += float(np.sqrt(diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]))
    return np.array(r)


def reference_rhs(prep, t: float, y: np.ndarray) -> np.ndarray:
    """Stacked-system derivative assembled from the per-attack signal helpers."""
    cfg = prep.cfg
    N = prep.N
    nx = 3 * (N + 1)
    X = y[:nx].reshape(N + 1, 3)
    e = y[nx:nx + N]
    xa = y[nx + N:]
    x0 = X[0]
    sp = prep.spacing
    plan = prep.plan
    active = t >= plan.t_start - 1e-9 * cfg.sim.h
    ctrl_mode = SignumMode(cfg.controller.sgn_mode, cfg.controller.sgn_eps)
    att_mode = SignumMode(cfg.attacker.sgn_mode, cfg.attacker.sgn_eps)
    K = prep.gains.K.reshape(3)
    jc = plan.local_index

    def signal(sender, receiver):
        atk = plan.edges.get((sender, receiver))
        if atk is None or not active:
            return np.zeros(3)
        name = atk.name
        if name == "leader":
            return attack_t1(xa, x0)
        if name == "forward":
            return attack_t2_forward(xa, x0, sender, sp, receiver=receiver, local_index=jc[receiver])
        if name == "return":
            return attack_t2_return(xa, x0, sender, sp, jc[sender])
        if name == "dc_forward":
            return attack_t3_pair_disconnected(X[sender], xa, sp, sender, receiver, jc[receiver])[0]
        if name == "dc_return":
            return attack_t3_pair_disconnected(X[receiver], xa, sp, receiver, sender, jc[sender])[1]
        if name == "intra":
            # keep the pair's relative error equal to their errors against the attacker formation
            return sp.d_local(jc[sender]) - sp.d_local(jc[receiver]) + sp.d_pair(receiver, sender)
        if name == "t5":
            lead = xa if cfg.attacker.t5_sigma == "attacker" else x0
            watched = [(j, lead if j == 0 else X[j]) for j in prep.graph.neighbors(receiver)]
            s_sub = disagreement(receiver, X[receiver], watched, sp)
            return attack_t5(xa, x0, s_sub, prep.c1, prep.c2, cfg.attacker.c3, K, att_mode)
        raise AssertionError(name)

    dy = np.zeros_like(y)
    dy[:3] = linear_deriv(x0, prep.u0(t), prep.plant)
    for i in range(1, N + 1):
        received = [(j, apply_fdi(X[j], signal(j, i))) for j in prep.graph.neighbors(i)]
        s = disagreement(i, X[i], received, sp)
        if cfg.controller.kind == "dynamic":
            u = dynamic_control(s, e[i - 1], K, ctrl_mode)
            dy[nx + i - 1] = coupling_gain_deriv(s, prep.gains.Gamma, K, cfg.controller.tau_adapt)
        else:
            u = static_control(s, prep.c1, prep.c2, K, ctrl_mode)
        dy[3 * i:3 * i + 3] = linear_deriv(X[i], u, prep.plant)
    dy[nx + N:] = linear_deriv(xa, prep.attacker.u_a(t), prep.plant)
    return dy
