"""Attacker reference dynamics, FDI signal generators and resource accounting.

Every channel attack is one of a handful of generator kinds.  The arithmetic
cores below are plain array expressions so the integration kernel compiles
the very same functions that the public per-attack helpers call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .control import SpacingPolicy, sgn_scalar, SignumMode
from .dynamics import as_state
from .graph import Channel, CommGraph, partition_followers, FollowerPartition

PLAN_KINDS = ("none", "t1", "t2", "t3", "t4", "t5")

# generator codes shared with the kernel
GEN_NONE = 0
GEN_LEADER = 1      # a = x_a - x_0
GEN_FORWARD = 2     # a = x_a - x_0 + off
GEN_RETURN = 3      # a = x_0 - x_a + off
GEN_DC_FORWARD = 4  # a = x_a - x_sender + off
GEN_DC_RETURN = 5   # a = x_receiver - x_a + off
GEN_INTRA = 6       # a = off
GEN_T5 = 7          # a = x_a - x_0 - comp * sgn(K s_sub) * K^T

GENERATOR_NAMES = {
    GEN_LEADER: "leader",
    GEN_FORWARD: "forward",
    GEN_RETURN: "return",
    GEN_DC_FORWARD: "dc_forward",
    GEN_DC_RETURN: "dc_return",
    GEN_INTRA: "intra",
    GEN_T5: "t5",
}


class AttackPlanError(ValueError):
    pass


# -- arithmetic cores ---------------------------------------------------------

def leader_core(x_a, x_0):
    return x_a - x_0


def forward_core(x_a, x_0, off):
    return x_a - x_0 + off


def return_core(x_a, x_0, off):
    return x_0 - x_a + off


def dc_forward_core(x_a, x_send, off):
    return x_a - x_send + off


def dc_return_core(x_a, x_recv, off):
    return x_recv - x_a + off


def t5_core(x_a, x_0, K, comp, sigma):
    return x_a - x_0 - comp * sigma * K


# -- public signal helpers ----------------------------------------------------

def apply_fdi(x_j, a_ji) -> np.ndarray:
    """Corrupted copy ``x_j + a_ji`` of a transmitted state."""
    return as_state(x_j) + as_state(a_ji)


def attack_t1(x_a, x_0) -> np.ndarray:
    """Leader-link substitution: receivers see the attacker instead of the leader."""
    return leader_core(as_state(x_a), as_state(x_0))


def attack_t2_forward(x_a, x_0, i: int, spacing: SpacingPolicy, receiver: int | None = None,
                      local_index: int | None = None) -> np.ndarray:
    """Signal on the channel from a leader-connected follower ``i`` into a target.

    Without ``receiver`` this is ``x_a - x_0 + d_i``.  With the receiver
    ``j`` and its local rank ``j^c`` the offset gains the correction
    ``d_ji - d_{j^c}``, which vanishes when ``i = j - j^c`` and otherwise keeps
    the receiver's formation error at zero once it follows the attacker.
    """
    off = spacing.d(i)
    if receiver is not None:
        if local_index is None:
            raise ValueError("local_index is required together with receiver")
        off = off + spacing.d_pair(receiver, i) - spacing.d_local(local_index)
    return forward_core(as_state(x_a), as_state(x_0), off)


def attack_t2_return(x_a, x_0, j: int, spacing: SpacingPolicy, local_index: int) -> np.ndarray:
    """Signal on the channel from target ``j`` back to a leader-connected follower."""
    off = spacing.d_local(local_index) - spacing.d(j)
    return return_core(as_state(x_a), as_state(x_0), off)


def attack_t3_pair_connected(x_a, x_0, spacing: SpacingPolicy, i: int, j: int, local_index: int,
                             corrected: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """``(a_ij, a_ji)`` between a leader-connected ``i`` and a target ``j``."""
    fwd = attack_t2_forward(x_a, x_0, i, spacing, j if corrected else None,
                            local_index if corrected else None)
    return fwd, attack_t2_return(x_a, x_0, j, spacing, local_index)


def attack_t3_pair_disconnected(x_i, x_a, spacing: SpacingPolicy, i: int, j: int,
                                local_index: int) -> tuple[np.ndarray, np.ndarray]:
    """``(a_ij, a_ji)`` between a follower ``i`` cut off from the leader and a target ``j``.

    Both signals need the live state of ``i``.
    """
    x_i, x_a = as_state(x_i), as_state(x_a)
    d_jc = spacing.d_local(local_index)
    a_ij = dc_forward_core(x_a, x_i, -d_jc - spacing.d_pair(i, j))
    a_ji = dc_return_core(x_a, x_i, -spacing.d_pair(j, i) + d_jc)
    return a_ij, a_ji


def t5_compensation(c1: float, c2: float, c3: float, K) -> float:
    """Scale of the vector ``comp * K^T`` chosen so ``c1 K (comp K^T) = c3 - c2``."""
    if c3 < c2:
        raise AttackPlanError(f"c3={c3} must not be below c2={c2}")
    K = np.asarray(K, dtype=float).reshape(3)
    return (c3 - c2) / (c1 * float(K @ K))


def attack_t5(x_a, x_0, s_i, c1: float, c2: float, c3: float, K,
              mode: SignumMode | str = "exact") -> np.ndarray:
    """Leader-link signal that lifts the receiver's signum gain from ``c2`` to ``c3``.

    ``s_i`` is the disagreement receiver ``i`` would compute with the leader
    replaced by the attacker and true follower states.
    """
    if isinstance(mode, str):
        mode = SignumMode(mode)
    K = np.asarray(K, dtype=float).reshape(3)
    comp = t5_compensation(c1, c2, c3, K)
    sigma = sgn_scalar(float(K @ as_state(s_i)), mode.code, mode.eps)
    return t5_core(as_state(x_a), as_state(x_0), K, comp, sigma)


def t5_residual_floor(c1: float, c2: float, c3: float, K) -> float:
    """Norm of the compensation vector, i.e. the leader-term residual at a pinned follower."""
    K = np.asarray(K, dtype=float).reshape(3)
    return (c3 - c2) / (c1 * float(np.linalg.norm(K)))


# -- attacker reference -------------------------------------------------------

@dataclass(frozen=True)
class HarmonicInput:
    """``u(t) = s * sin(w t) + c * cos(w t)``."""

    s: float
    c: float
    w: float

    def __call__(self, t):
        return self.s * np.sin(self.w * t) + self.c * np.cos(self.w * t)

    @property
    def bound(self) -> float:
        return float(np.hypot(self.s, self.c))


@dataclass(frozen=True)
class VelocityProfile:
    """Reference velocity ``v(t) = bias + amp * sin(w t)`` realized by the lag model."""

    bias: float
    amp: float
    w: float = 0.1

    def velocity(self, t):
        return self.bias + self.amp * np.sin(self.w * t)

    def accel(self, t):
        return self.amp * self.w * np.cos(self.w * t)

    def displacement(self, t):
        """Distance covered since ``t = 0``."""
        return self.bias * t + (self.amp / self.w) * (1.0 - np.cos(self.w * t))

    def input(self, tau: float) -> HarmonicInput:
        # u = a + tau * a'
        aw = self.amp * self.w
        return HarmonicInput(s=-tau * aw * self.w, c=aw, w=self.w)

    def state(self, t, p0: float = 0.0) -> np.ndarray:
        return np.array([p0 + self.displacement(t), self.velocity(t), self.accel(t)])


@dataclass(frozen=True)
class AttackerRef:
    x_a0: np.ndarray
    u_a: HarmonicInput

    @property
    def gamma2(self) -> float:
        return self.u_a.bound


# -- plans --------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelAttack:
    generator: int
    offset: np.ndarray

    @property
    def name(self) -> str:
        return GENERATOR_NAMES[self.generator]


@dataclass(frozen=True)
class AttackPlan:
    kind: str
    targets: frozenset[int] = frozenset()
    edges: dict[Channel, ChannelAttack] = field(default_factory=dict)
    t_start: float = 0.0
    c3: float | None = None
    partition: FollowerPartition | None = None
    local_index: dict[int, int] = field(default_factory=dict)

    @property
    def controller(self) -> str:
        return "static" if self.kind in ("t4", "t5") else "dynamic"


def _zero() -> np.ndarray:
    return np.zeros(3)


def build_attack_plan(kind: str, g: CommGraph, spacing: SpacingPolicy, targets: Iterable[int] = (),
                      t_start: float = 0.0, c3: float | None = None) -> AttackPlan:
    """Compile an attack scenario into per-channel generators."""
    kind = kind.lower()
    if kind not in PLAN_KINDS:
        raise AttackPlanError(f"unknown attack kind {kind!r}; expected one of {PLAN_KINDS}")
    targets = frozenset(int(t) for t in targets)
    edges: dict[Channel, ChannelAttack] = {}
    local: dict[int, int] = {}
    part = None
    leader_links = [c for c in g.channels() if c[0] == 0]
    if kind in ("t1", "t4"):
        edges = {c: ChannelAttack(GEN_LEADER, _zero()) for c in leader_links}
    elif kind == "t5":
        if c3 is None:
            raise AttackPlanError("t5 needs the gain c3")
        edges = {c: ChannelAttack(GEN_T5, _zero()) for c in leader_links}
    elif kind in ("t2", "t3"):
        V_d = set(g.pinned())
        V_nd = set(range(1, g.N + 1)) - V_d
        if kind == "t2":
            bad = targets - V_nd
            if targets and bad:
                raise AttackPlanError(f"t2 targets every non-pinned follower; got extra {sorted(bad)}")
            targets = frozenset(V_nd)
        if not targets:
            raise AttackPlanError(f"{kind} needs a non-empty target set")
        if targets & V_d:
            raise AttackPlanError(
                f"targets {sorted(targets & V_d)} are pinned to the leader and cannot be captured stealthily"
            )
        if kind == "t2":
            attacked = [c for c in g.channels() if (c[0] in V_d and c[1] in V_nd) or (c[0] in V_nd and c[1] in V_d)]
        else:
            attacked = [c for c in g.channels() if c[0] in targets or c[1] in targets]
        part = partition_followers(g, attacked, targets)
        local = {j: part.local_index(j) for j in sorted(targets)}
        for sender, receiver in attacked:
            if receiver in targets and sender in targets:
                off = spacing.d_local(local[sender]) - spacing.d_local(local[receiver]) + spacing.d_pair(receiver, sender)
                edges[(sender, receiver)] = ChannelAttack(GEN_INTRA, off)
            elif receiver in targets:
                j, i, jc = receiver, sender, local[receiver]
                if i in part.V_nd_dc:
                    off = -spacing.d_local(jc) - spacing.d_pair(i, j)
                    edges[(i, j)] = ChannelAttack(GEN_DC_FORWARD, off)
                else:
                    off = spacing.d(i) + spacing.d_pair(j, i) - spacing.d_local(jc)
                    edges[(i, j)] = ChannelAttack(GEN_FORWARD, off)
            else:
                j, i, jc = sender, receiver, local[sender]
                if i in part.V_nd_dc:
                    off = -spacing.d_pair(j, i) + spacing.d_local(jc)
                    edges[(j, i)] = ChannelAttack(GEN_DC_RETURN, off)
                else:
                    off = spacing.d_local(jc) - spacing.d(j)
                    edges[(j, i)] = ChannelAttack(GEN_RETURN, off)
    return AttackPlan(kind=kind, targets=targets, edges=edges, t_start=float(t_start), c3=c3,
                      partition=part, local_index=local)


# -- resources ----------------------------------------------------------------

@dataclass(frozen=True)
class ResourceLedger:
    scenario: str
    controller: str
    leader_links: str
    disruption: tuple[str, ...]
    disclosure: tuple[str, ...]
    knowledge: tuple[str, ...]
    stealthy: bool

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "controller": self.controller,
            "leader_links": self.leader_links,
            "disruption": list(self.disruption),
            "disclosure": list(self.disclosure),
            "knowledge": list(self.knowledge),
            "stealthy": self.stealthy,
        }

    def to_table(self) -> str:
        rows = [
            ("Scenario", self.scenario),
            ("Controller", self.controller),
            ("Leader links", self.leader_links),
            ("Disruption", ", ".join(self.disruption)),
            ("Disclosure", ", ".join(self.disclosure)),
            ("Knowledge", ", ".join(self.knowledge)),
            ("Stealthy?", "yes" if self.stealthy else "no"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}} | {v}" for k, v in rows)


_SCENARIO_LABEL = {
    "t1": "T1 all followers",
    "t2": "T2 followers not pinned to the leader",
    "t3": "T3 subset of non-pinned followers",
    "t4": "T4 all followers, attacker input bound <= gamma",
    "t5": "T5 all followers, attacker input bound > gamma",
}


def _fmt(c: Channel) -> str:
    return f"{c[0]}->{c[1]}"


def required_resources(plan: AttackPlan, g: CommGraph) -> ResourceLedger:
    """Disruption, disclosure and knowledge an attacker needs for ``plan``."""
    if plan.kind == "none":
        raise AttackPlanError("an attack-free plan needs no resources")
    V_d = set(g.pinned())
    if plan.kind in ("t2", "t3") and plan.targets & V_d:
        raise AttackPlanError("targets pinned to the leader cannot be captured stealthily")
    disruption = tuple(_fmt(c) for c in sorted(plan.edges))
    disclosure: list[str] = ["x_0"]
    if plan.kind in ("t1", "t4"):
        knowledge = ["leader outgoing links"]
        if plan.kind == "t4":
            knowledge.append("leader input bound gamma")
    elif plan.kind == "t2":
        knowledge = ["links to/from non-pinned followers", "follower indices"]
    elif plan.kind == "t3":
        disclosure += [f"x_{i}" for i in sorted(plan.partition.V_nd_dc)]
        knowledge = ["full topology"]
    else:
        watched = set()
        for i in V_d:
            watched.add(i)
            watched.update(j for j in g.neighbors(i) if j != 0)
        disclosure += [f"x_{j}" for j in sorted(watched)]
        knowledge = ["leader outgoing links", "control gains c1, c2, K", "control protocol structure"]
    return ResourceLedger(
        scenario=_SCENARIO_LABEL[plan.kind],
        controller=plan.controller,
        leader_links="secure" if plan.kind in ("t2", "t3") else "vulnerable",
        disruption=disruption,
        disclosure=tuple(disclosure),
        knowledge=tuple(knowledge),
        stealthy=plan.kind != "t5",
    )
