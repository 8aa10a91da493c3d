"""Communication topology, Laplacian blocks and follower partitions.

Vehicles are indexed 0 (leader) and 1..N (followers).  A directed channel is
a ``(sender, receiver)`` pair; follower links are bidirectional so every
follower edge contributes two channels, the leader only sends.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Channel = tuple[int, int]


@dataclass(frozen=True)
class CommGraph:
    N: int
    adj: np.ndarray = field(repr=False)
    pin: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.array(self.adj, dtype=int)
        pin = np.array(self.pin, dtype=int).reshape(-1)
        if adj.shape != (self.N, self.N) or pin.shape != (self.N,):
            raise ValueError(f"adjacency must be {self.N}x{self.N} and pin length {self.N}")
        if not np.array_equal(adj, adj.T):
            raise ValueError("follower adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("self-loops are not allowed")
        if not (np.isin(adj, (0, 1)).all() and np.isin(pin, (0, 1)).all()):
            raise ValueError("adjacency and pin entries must be 0/1")
        adj.setflags(write=False)
        pin.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        object.__setattr__(self, "pin", pin)

    def __eq__(self, other):
        if not isinstance(other, CommGraph):
            return NotImplemented
        return self.N == other.N and np.array_equal(self.adj, other.adj) and np.array_equal(self.pin, other.pin)

    def __hash__(self):
        return hash((self.N, self.adj.tobytes(), self.pin.tobytes()))

    @classmethod
    def from_edges(cls, N: int, edges: Iterable[tuple[int, int]], pins: Iterable[int]) -> "CommGraph":
        """Build from 1-based follower edges and the 1-based pinned followers."""
        adj = np.zeros((N, N), dtype=int)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on follower {i}")
            _check_follower(N, i)
            _check_follower(N, j)
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = 1
        pin = np.zeros(N, dtype=int)
        for i in pins:
            _check_follower(N, i)
            pin[i - 1] = 1
        return cls(N, adj, pin)

    def neighbors(self, i: int) -> list[int]:
        """In-neighbours of follower ``i`` in ascending order, leader first."""
        nbrs = [0] if self.pin[i - 1] else []
        nbrs += [j + 1 for j in np.flatnonzero(self.adj[i - 1])]
        return nbrs

    def channels(self) -> list[Channel]:
        """All directed channels, grouped by receiver in ascending order."""
        return [(j, i) for i in range(1, self.N + 1) for j in self.neighbors(i)]

    def edges(self) -> list[tuple[int, int]]:
        return [(i + 1, j + 1) for i, j in zip(*np.nonzero(np.triu(self.adj)))]

    def pinned(self) -> list[int]:
        return [int(i) + 1 for i in np.flatnonzero(self.pin)]


def _check_follower(N: int, i: int) -> None:
    if not 1 <= i <= N:
        raise ValueError(f"follower index {i} outside 1..{N}")


def build_knn_topology(N: int, k: int) -> CommGraph:
    """k-nearest-neighbour leader tracking topology.

    Followers ``i`` and ``j`` talk iff ``0 < |i - j| <= k``; the leader feeds
    followers ``1..k``.  Neighbourhoods are truncated at the platoon ends.
    """
    if N < 1:
        raise ValueError("need at least one follower")
    if not 1 <= k <= N:
        raise ValueError(f"neighbour radius k={k} must satisfy 1 <= k <= N={N}")
    idx = np.arange(N)
    gap = np.abs(idx[:, None] - idx[None, :])
    adj = ((gap > 0) & (gap <= k)).astype(int)
    pin = (idx < k).astype(int)
    return CommGraph(N, adj, pin)


@dataclass(frozen=True)
class LaplacianBlocks:
    L1: np.ndarray
    L2: np.ndarray
    eigs: np.ndarray

    @property
    def lambda1(self) -> float:
        return float(self.eigs[0])


def laplacian_blocks(g: CommGraph) -> LaplacianBlocks:
    """Follower block ``L1`` (pinning on the diagonal) and leader column ``L2``."""
    L1 = np.diag(g.adj.sum(axis=1) + g.pin).astype(float) - g.adj
    L2 = -g.pin.astype(float).reshape(-1, 1)
    eigs = np.linalg.eigvalsh(L1)
    return LaplacianBlocks(L1, L2, np.sort(eigs))


def _reachable(g: CommGraph, removed: set[Channel] = frozenset(), dropped: set[int] = frozenset()) -> set[int]:
    """Followers reachable from the leader over the surviving channels."""
    seen: set[int] = set()
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in range(1, g.N + 1):
            if v in seen or v in dropped or (u, v) in removed:
                continue
            linked = g.pin[v - 1] if u == 0 else g.adj[u - 1, v - 1]
            if linked:
                seen.add(v)
                queue.append(v)
    return seen


def validate_assumption1(g: CommGraph) -> tuple[bool, list[int]]:
    """Check that every follower has a directed path from the leader.

    Returns the verdict and the sorted list of unreachable followers.
    """
    if not np.array_equal(g.adj, g.adj.T):
        return False, list(range(1, g.N + 1))
    reach = _reachable(g)
    missing = [i for i in range(1, g.N + 1) if i not in reach]
    return not missing, missing


@dataclass(frozen=True)
class FollowerPartition:
    V_d: frozenset[int]
    V_nd: frozenset[int]
    V_nd_a: frozenset[int]
    V_nd_c: frozenset[int]
    V_nd_dc: frozenset[int]

    def local_index(self, j: int) -> int:
        """1-based rank of ``j`` within the ordered set of non-pinned followers."""
        return sorted(self.V_nd).index(j) + 1


def partition_followers(g: CommGraph, attacked: Iterable[Channel], targets: Iterable[int]) -> FollowerPartition:
    """Split followers by leader pinning and by attack-free reachability.

    Reachability is evaluated with the attacked channels and the target
    vehicles removed.
    """
    targets = frozenset(int(t) for t in targets)
    V_d = frozenset(g.pinned())
    V_nd = frozenset(range(1, g.N + 1)) - V_d
    bad = targets & V_d
    if bad:
        raise ValueError(
            f"targets {sorted(bad)} are pinned to the leader and cannot be captured stealthily"
        )
    for t in targets:
        _check_follower(g.N, t)
    reach = _reachable(g, removed=set(attacked), dropped=set(targets))
    rest = V_nd - targets
    return FollowerPartition(
        V_d=V_d,
        V_nd=V_nd,
        V_nd_a=targets,
        V_nd_c=frozenset(i for i in rest if i in reach),
        V_nd_dc=frozenset(i for i in rest if i not in reach),
    )


def edit_edge(g: CommGraph, endpoints: tuple[int, int], on: bool) -> CommGraph:
    """Switch a follower edge ``(i, j)`` or a leader pin ``(0, i)`` on or off."""
    i, j = endpoints
    if i == j:
        raise ValueError("cannot create a self-loop")
    adj = g.adj.copy()
    pin = g.pin.copy()
    if 0 in (i, j):
        f = j if i == 0 else i
        _check_follower(g.N, f)
        pin[f - 1] = int(on)
    else:
        _check_follower(g.N, i)
        _check_follower(g.N, j)
        adj[i - 1, j - 1] = adj[j - 1, i - 1] = int(on)
    return CommGraph(g.N, adj, pin)


def toggle_edge(g: CommGraph, endpoints: tuple[int, int]) -> CommGraph:
    i, j = endpoints
    if 0 in (i, j):
        f = j if i == 0 else i
        current = bool(g.pin[f - 1])
    else:
        current = bool(g.adj[i - 1, j - 1])
    return edit_edge(g, endpoints, not current)
