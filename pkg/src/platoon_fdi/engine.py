"""Scenario resolution, integration and results.

``prepare`` turns a :class:`ScenarioConfig` into the graph, gains, attack
plan and flat arrays the compiled kernel consumes; ``run_scenario``
integrates it and packs a :class:`SimResult`.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .adversary import (AttackerRef, AttackPlan, HarmonicInput, VelocityProfile, build_attack_plan, GEN_T5,
                        t5_compensation, AttackPlanError)
from .config import ConfigError, ScenarioConfig, validate
from .control import SignumMode, SpacingPolicy
from .detection import ResidualTrace, StealthVerdict, residual_matrix, stealth_verdict
from .dynamics import LinearPlant
from .graph import CommGraph, LaplacianBlocks, build_knn_topology, laplacian_blocks, validate_assumption1
from .synthesis import GainSet, override_gains, synthesize_gains

log = logging.getLogger(__name__)

RK4_REAL_LIMIT = 2.785  # RK4 stability interval on the negative real axis
LITERAL_LEADER_INPUT = (0.4 * 0.005, 0.4 * 0.0075)


class SimulationError(RuntimeError):
    pass


def input_bound(u: HarmonicInput, samples: int = 200001) -> float:
    """Max of ``|u|`` over one period on a uniform grid."""
    t = np.linspace(0.0, 2.0 * math.pi / u.w, samples)
    return float(np.max(np.abs(u(t))))


@dataclass
class Prepared:
    """Everything derived from a config before integration."""

    cfg: ScenarioConfig
    graph: CommGraph
    blocks: LaplacianBlocks
    plant: LinearPlant
    spacing: SpacingPolicy
    leader_profile: VelocityProfile
    u0: HarmonicInput
    gamma: float
    gains: GainSet
    c1: float
    c2: float
    attacker: AttackerRef
    attacker_profile: VelocityProfile
    plan: AttackPlan
    channels: list
    send: np.ndarray
    recv: np.ndarray
    gen: np.ndarray
    off: np.ndarray
    comp: float
    y0: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.graph.N

    def kernel_args(self) -> tuple:
        """Arguments after ``(y0, t0, h, nsteps, every)`` for :func:`kernel.integrate`."""
        c, a = self.cfg.controller, self.cfg.attacker
        ctrl_mode = SignumMode(c.sgn_mode, c.sgn_eps)
        att_mode = SignumMode(a.sgn_mode, a.sgn_eps)
        return (
            self.N, self.plant.tau, self.send, self.recv, self.gen, self.off, float(self.spacing.d0),
            float(self.plan.t_start), bool(np.any(self.gen == GEN_T5)), 0 if a.t5_sigma == "attacker" else 1,
            self.gains.K.reshape(3).astype(float), np.ascontiguousarray(self.gains.Gamma, dtype=float),
            kernel.CTRL_DYNAMIC if c.kind == "dynamic" else kernel.CTRL_STATIC,
            float(self.c1), float(self.c2), float(c.tau_adapt), ctrl_mode.code, float(ctrl_mode.eps),
            float(self.comp), att_mode.code, float(att_mode.eps),
            np.array([self.u0.s, self.u0.c, self.u0.w]),
            np.array([self.attacker.u_a.s, self.attacker.u_a.c, self.attacker.u_a.w]),
        )

    def rhs_args(self) -> tuple:
        """Arguments after ``(t, y, dy)`` for :func:`kernel.rhs`, scratch buffers included."""
        args = self.kernel_args()
        C, N = len(self.send), self.N
        return args + (np.zeros((C, 3)), np.zeros((N, 3)), np.zeros((N, 3)), np.zeros(N), np.zeros(N))

    def stiffness_ratio(self, e_max: float) -> float:
        """``h`` times the fastest closed-loop acceleration pole, estimated in the boundary layer."""
        c = self.cfg.controller
        K3 = abs(float(self.gains.K.reshape(3)[2]))
        Lmax = float(np.max(np.diag(self.blocks.L1)))
        slope = 1.0 / c.sgn_eps if c.sgn_mode == "boundary" else 0.0
        if c.kind == "dynamic":
            gain = e_max * (1.0 + slope)
        else:
            gain = self.c1 + self.c2 * slope
        return self.cfg.sim.h * (1.0 + Lmax * K3 * gain) / self.plant.tau

    def attacker_offsets(self) -> dict[int, np.ndarray]:
        """Formation offset of each attacker-following vehicle relative to ``x_a``."""
        if self.plan.kind == "none":
            return {}
        if self.plan.kind in ("t2", "t3"):
            return {j: self.spacing.d_local(jc) for j, jc in self.plan.local_index.items()}
        return {i: self.spacing.d(i) for i in range(1, self.N + 1)}


def _graph(cfg: ScenarioConfig) -> CommGraph:
    g = cfg.graph
    if g.edges is None:
        return build_knn_topology(g.N, g.k)
    return CommGraph.from_edges(g.N, [tuple(e) for e in g.edges], g.pins)


def _leader(cfg: ScenarioConfig, tau: float) -> tuple[VelocityProfile, HarmonicInput]:
    ld = cfg.leader
    profile = VelocityProfile(ld.v_bias, ld.amplitude, ld.omega)
    if ld.input == "literal":
        return profile, HarmonicInput(LITERAL_LEADER_INPUT[0], LITERAL_LEADER_INPUT[1], ld.omega)
    return profile, profile.input(tau)


def _attacker_amplitude(cfg: ScenarioConfig, tau: float) -> float:
    a = cfg.attacker
    if a.gamma2 is None:
        return a.amplitude
    # |u_a| peaks at amp * w * sqrt(1 + (tau w)^2)
    return a.gamma2 / (a.omega * math.hypot(1.0, tau * a.omega))


def prepare(cfg: ScenarioConfig) -> Prepared:
    validate(cfg)
    warnings: list[str] = []
    try:
        graph = _graph(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc), path="graph") from None
    ok, unreachable = validate_assumption1(graph)
    if not ok:
        msg = f"followers {unreachable} are not reachable from the leader"
        if cfg.graph.require_assumption1:
            raise ConfigError(msg, path="graph", hint="add pins or edges, or set graph.require_assumption1: false")
        warnings.append(msg)
    blocks = laplacian_blocks(graph)
    plant = LinearPlant(cfg.platoon.tau)
    spacing = SpacingPolicy(cfg.platoon.d0)
    leader_profile, u0 = _leader(cfg, plant.tau)
    gamma = input_bound(u0)

    gc = cfg.gains
    lam = blocks.lambda1
    if gc.K is not None:
        c1_def = gc.margin / lam if lam > 0 else math.inf
        c1 = gc.c1 if gc.c1 is not None else c1_def
        c2 = gc.c2 if gc.c2 is not None else gc.margin * gamma
        gains = override_gains(gc.K, c1, c2)
    else:
        if lam <= 0:
            raise ConfigError("gain synthesis needs lambda1 > 0", path="graph",
                              hint="pin at least one follower in every component")
        gains = synthesize_gains(plant, None if gc.Q is None else np.asarray(gc.Q, dtype=float), lam, gamma, gc.margin)
        c1 = gc.c1 if gc.c1 is not None else gains.c1
        c2 = gc.c2 if gc.c2 is not None else gains.c2
        gains = GainSet(K=gains.K, Gamma=gains.Gamma, c1=c1, c2=c2, P_inv=gains.P_inv, source=gains.source)
    if cfg.controller.kind == "static" and lam > 0 and c1 <= 1.0 / lam:
        warnings.append(f"c1={c1:g} does not exceed 1/lambda1={1.0 / lam:.4g}")
    if cfg.controller.kind == "static" and c2 <= gamma:
        warnings.append(f"c2={c2:g} does not exceed gamma={gamma:.4g}")

    a = cfg.attacker
    aprof = VelocityProfile(a.v_bias, _attacker_amplitude(cfg, plant.tau), a.omega)
    try:
        plan = build_attack_plan(a.plan, graph, spacing, a.targets, a.t_start, a.c3)
    except AttackPlanError as exc:
        raise ConfigError(str(exc), path="attacker.targets") from None
    if a.p0 is None:
        # at onset the first captured vehicle's slot behind the attacker
        # coincides with its slot behind the leader
        shift = 0.0
        if plan.local_index:
            j = min(plan.local_index)
            shift = (j - plan.local_index[j]) * spacing.d0
        p_a0 = cfg.leader.p0 - shift + leader_profile.displacement(a.t_start) - aprof.displacement(a.t_start)
    else:
        p_a0 = a.p0
    attacker = AttackerRef(x_a0=aprof.state(0.0, p_a0), u_a=aprof.input(plant.tau))
    gamma2 = input_bound(attacker.u_a)
    comp = 0.0
    if a.plan == "t5":
        if a.c3 < gamma2:
            raise ConfigError(f"c3={a.c3:g} is below the attacker input bound {gamma2:.4g}", path="attacker.c3",
                              hint="raise c3 or slow the attacker")
        try:
            comp = t5_compensation(c1, c2, a.c3, gains.K)
        except AttackPlanError as exc:
            raise ConfigError(str(exc), path="attacker.c3") from None
    if a.plan == "t4" and gamma2 > gamma * (1 + 1e-12):
        warnings.append(f"attacker input bound {gamma2:.4g} exceeds gamma={gamma:.4g}")

    channels = graph.channels()
    send = np.array([c[0] for c in channels], dtype=np.int64)
    recv = np.array([c[1] for c in channels], dtype=np.int64)
    gen = np.zeros(len(channels), dtype=np.int64)
    off = np.zeros((len(channels), 3))
    for n, ch in enumerate(channels):
        atk = plan.edges.get(ch)
        if atk is not None:
            gen[n] = atk.generator
            off[n] = atk.offset

    N = graph.N
    x0 = leader_profile.state(0.0, cfg.leader.p0)
    X0 = np.zeros((N + 1, 3))
    X0[0] = x0
    for i in range(1, N + 1):
        if cfg.platoon.init_states is not None:
            X0[i] = cfg.platoon.init_states[i - 1]
        else:
            X0[i] = x0 - spacing.d(i) + np.array([cfg.platoon.init_offset, 0.0, 0.0])
    y0 = np.concatenate([X0.ravel(), np.full(N, cfg.controller.e0), attacker.x_a0])
    return Prepared(cfg=cfg, graph=graph, blocks=blocks, plant=plant, spacing=spacing,
                    leader_profile=leader_profile, u0=u0, gamma=gamma, gains=gains, c1=c1, c2=c2,
                    attacker=attacker, attacker_profile=aprof, plan=plan, channels=channels, send=send,
                    recv=recv, gen=gen, off=off, comp=comp, y0=y0, warnings=warnings)


# -- world state --------------------------------------------------------------

@dataclass(frozen=True)
class WorldState:
    t: float
    X: np.ndarray   # (N+1, 3), leader first
    e: np.ndarray   # (N,)
    x_a: np.ndarray  # (3,)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.X.ravel(), self.e, self.x_a])

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray, N: int) -> "WorldState":
        nx = 3 * (N + 1)
        return cls(t=t, X=y[:nx].reshape(N + 1, 3).copy(), e=y[nx:nx + N].copy(), x_a=y[nx + N:].copy())


def initial_world(prep: Prepared) -> WorldState:
    return WorldState.from_vector(0.0, prep.y0, prep.N)


def _describe_failure(y: np.ndarray, N: int) -> str:
    nx = 3 * (N + 1)
    bad = int(np.flatnonzero(~np.isfinite(y))[0])
    if bad < nx:
        v = bad // 3
        return "leader" if v == 0 else f"follower {v}"
    if bad < nx + N:
        return f"coupling gain of follower {bad - nx + 1}"
    return "attacker"


def step(world: WorldState, h: float, prep: Prepared) -> WorldState:
    """One RK4 step of the stacked system."""
    y = np.ascontiguousarray(world.to_vector(), dtype=float)
    Y, _, _, failed, y_last = kernel.integrate(y, float(world.t), float(h), 1, 1, *prep.kernel_args())
    if failed >= 0:
        raise SimulationError(f"non-finite state in {_describe_failure(y_last, prep.N)} at t={world.t + h:.6g} s")
    return WorldState.from_vector(world.t + h, Y[1], prep.N)


def rhs(prep: Prepared, t: float, y: np.ndarray) -> np.ndarray:
    """Time derivative of the stacked state, as used inside every RK4 stage."""
    dy = np.zeros_like(y, dtype=float)
    t_on = prep.plan.t_start - 1e-9 * prep.cfg.sim.h
    args = list(prep.rhs_args())
    args[7] = t_on
    kernel.rhs(float(t), np.ascontiguousarray(y, dtype=float), dy, *args)
    return dy


# -- results ------------------------------------------------------------------

@dataclass
class SimResult:
    prepared: Prepared
    t: np.ndarray          # (T,)
    X: np.ndarray          # (T, N+1, 3) leader first
    e: np.ndarray          # (T, N)
    x_a: np.ndarray        # (T, 3)
    u: np.ndarray          # (T, N+1) leader input first
    received: np.ndarray   # (T, C, 3) delivered state per channel
    residuals: np.ndarray  # (T, N)
    verdict: StealthVerdict
    metadata: dict
    digest: str

    @property
    def config(self) -> ScenarioConfig:
        return self.prepared.cfg

    @property
    def N(self) -> int:
        return self.prepared.N

    def trace(self) -> ResidualTrace:
        return ResidualTrace(self.t, self.residuals, self.prepared.cfg.sim.sample_period)

    def error_vs_leader(self) -> np.ndarray:
        """``||x_i - x_0 + d_i||`` for every follower, ``(T, N)``."""
        d = np.array([self.prepared.spacing.d(i) for i in range(1, self.N + 1)])
        return np.linalg.norm(self.X[:, 1:, :] - self.X[:, :1, :] + d[None], axis=2)

    def error_vs_attacker(self) -> dict[int, np.ndarray]:
        """``||x_j - x_a + d||`` for every attacker-following vehicle with its offset."""
        out = {}
        for j, off in self.prepared.attacker_offsets().items():
            out[j] = np.linalg.norm(self.X[:, j, :] - self.x_a + off[None], axis=1)
        return out

    def tail(self, window: float | None = None) -> np.ndarray:
        w = self.prepared.cfg.detection.window if window is None else window
        return self.t >= self.t[-1] - w - 1e-9

    def summary(self) -> dict:
        tail = self.tail()
        ev_l = self.error_vs_leader()[tail].max(axis=0)
        ev_a = {j: float(v[tail].max()) for j, v in self.error_vs_attacker().items()}
        return {
            "name": self.config.name,
            "hash": self.digest,
            "stealthy": self.verdict.all_stealthy,
            "verdict": self.verdict.to_dict(),
            "tail_error_vs_leader": [float(x) for x in ev_l],
            "tail_error_vs_attacker": {str(k): v for k, v in ev_a.items()},
            "final_gains": [float(x) for x in self.e[-1]],
            "warnings": list(self.metadata.get("warnings", [])),
        }


def trace_hash(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype="<f8")
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def run_prepared(prep: Prepared) -> SimResult:
    cfg = prep.cfg
    h = cfg.sim.h
    nsteps = int(round(cfg.sim.horizon / h))
    every = int(round(cfg.sim.sample_period / h))
    start = time.perf_counter()
    Y, U, XC, failed, y_last = kernel.integrate(prep.y0.copy(), 0.0, h, nsteps, every, *prep.kernel_args())
    elapsed = time.perf_counter() - start
    if failed >= 0:
        raise SimulationError(f"non-finite state in {_describe_failure(y_last, prep.N)} at t={(failed + 1) * h:.6g} s")
    N = prep.N
    nx = 3 * (N + 1)
    t = np.arange(Y.shape[0]) * (every * h)
    X = Y[:, :nx].reshape(-1, N + 1, 3)
    e = Y[:, nx:nx + N]
    xa = Y[:, nx + N:]
    r = residual_matrix(X, XC, prep.send, prep.recv, N, prep.spacing.d0)
    d = cfg.detection
    verdict = stealth_verdict(ResidualTrace(t, r, cfg.sim.sample_period), d.settle, d.window, d.eps_stealth)
    warnings = list(prep.warnings)
    ratio = prep.stiffness_ratio(float(np.max(e)) if cfg.controller.kind == "dynamic" else 0.0)
    if cfg.controller.sgn_mode == "boundary" and ratio > RK4_REAL_LIMIT:
        warnings.append(f"step h={h:g} s may be unstable inside the signum boundary layer "
                        f"(h * fastest pole = {ratio:.3g} > {RK4_REAL_LIMIT}); reduce sim.h or widen controller.sgn_eps")
    for w in warnings:
        log.warning("%s: %s", cfg.name, w)
    digest = trace_hash(t, X, e, xa, U, XC, r)
    meta = {
        "name": cfg.name,
        "gains": prep.gains.to_dict() | {"c1": prep.c1, "c2": prep.c2},
        "gains_provenance": {
            "K": prep.gains.source,
            "c1": "config" if cfg.gains.c1 is not None else "bound",
            "c2": "config" if cfg.gains.c2 is not None else "bound",
        },
        "lambda1": prep.blocks.lambda1,
        "gamma": prep.gamma,
        "gamma2": input_bound(prep.attacker.u_a),
        "t5_compensation": prep.comp,
        "partition": None if prep.plan.partition is None else {
            k: sorted(v) for k, v in vars(prep.plan.partition).items()
        },
        "local_index": {str(k): v for k, v in prep.plan.local_index.items()},
        "attacked_channels": [f"{s}->{r_}" for s, r_ in sorted(prep.plan.edges)],
        "steps": nsteps,
        "stiffness_ratio": ratio,
        "warnings": warnings,
        "elapsed_s": elapsed,
    }
    return SimResult(prepared=prep, t=t, X=X, e=e, x_a=xa, u=U, received=XC, residuals=r,
                     verdict=verdict, metadata=meta, digest=digest)


def run_scenario(cfg: ScenarioConfig) -> SimResult:
    """Integrate a scenario over its horizon and evaluate the detector."""
    return run_prepared(prepare(cfg))
