"""Undirected demand graph with a directed-arc view and shortest-path tables.

Vertices are 0-based internally; all file formats and user-facing ids are
1-based. Edges are normalized so that i < j; the two directed arcs (i, j)
and (j, i) share the edge's cost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

# Absolute tolerance for cost/demand comparisons (instance data carries at
# most three decimal places).
EPS = 1e-9


class InstanceError(ValueError):
    """Instance data violates a structural invariant."""


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    cost: float
    demand: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.i, self.j)


@dataclass(frozen=True)
class Instance:
    """Connected undirected graph with per-edge spray demands.

    ``edges`` is sorted by (i, j) with i < j. ``capacity`` is the tank
    capacity shared by all robots; ``depot`` is a 0-based vertex id.
    """

    name: str
    n_vertices: int
    edges: tuple[Edge, ...]
    capacity: float
    depot: int = 0

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_demand(self) -> float:
        return float(sum(e.demand for e in self.edges))

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e.key: k for k, e in enumerate(self.edges)}

    def arcs(self) -> list[tuple[int, int]]:
        """All directed arcs, sorted: both orientations of every edge."""
        out = [e.key for e in self.edges] + [(e.j, e.i) for e in self.edges]
        out.sort()
        return out

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-vertex list of (neighbor, edge index), neighbors ascending."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for k, e in enumerate(self.edges):
            adj[e.i].append((e.j, k))
            adj[e.j].append((e.i, k))
        for lst in adj:
            lst.sort()
        return adj


def make_instance(
    name: str,
    n_vertices: int,
    edges: list[tuple[int, int, float, float]],
    capacity: float,
    depot: int = 1,
) -> Instance:
    """Build an Instance from 1-based (i, j, cost, demand) tuples.

    Edges are normalized to i < j and sorted; ids are shifted to 0-based.
    """
    norm = []
    for i, j, cost, demand in edges:
        if i == j:
            raise InstanceError(f"self-loop on vertex {i}")
        a, b = (i, j) if i < j else (j, i)
        norm.append(Edge(a - 1, b - 1, float(cost), float(demand)))
    norm.sort(key=lambda e: e.key)
    return Instance(name, n_vertices, tuple(norm), float(capacity), depot - 1)


def _validate(inst: Instance) -> None:
    n = inst.n_vertices
    if n <= 0:
        raise InstanceError("instance has no vertices")
    if not 0 <= inst.depot < n:
        raise InstanceError(f"depot {inst.depot + 1} outside vertex range 1..{n}")
    if inst.capacity <= 0:
        raise InstanceError("capacity must be positive")
    seen: set[tuple[int, int]] = set()
    for e in inst.edges:
        if not (0 <= e.i < n and 0 <= e.j < n):
            raise InstanceError(f"edge ({e.i + 1},{e.j + 1}) references unknown vertex")
        if e.i >= e.j:
            raise InstanceError(f"edge ({e.i + 1},{e.j + 1}) not normalized to i < j")
        if e.key in seen:
            raise InstanceError(f"parallel edge ({e.i + 1},{e.j + 1})")
        seen.add(e.key)
        if e.cost < 0:
            raise InstanceError(f"negative cost on edge ({e.i + 1},{e.j + 1})")
        if e.demand < 0:
            raise InstanceError(f"negative demand on edge ({e.i + 1},{e.j + 1})")
    if not any(e.demand > EPS for e in inst.edges):
        raise InstanceError("no edge carries positive demand")
    # Connectivity: undirected BFS from the depot must reach every vertex.
    seen_v = {inst.depot}
    frontier = [inst.depot]
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in inst.edges:
        adj[e.i].append(e.j)
        adj[e.j].append(e.i)
    while frontier:
        v = frontier.pop()
        for w in adj[v]:
            if w not in seen_v:
                seen_v.add(w)
                frontier.append(w)
    if len(seen_v) != n:
        missing = min(set(range(n)) - seen_v)
        raise InstanceError(
            f"graph is disconnected: no path between vertex {inst.depot + 1} "
            f"and vertex {missing + 1}"
        )


@dataclass(frozen=True)
class ShortestPathTable:
    """All-pairs shortest distances and reconstructable paths.

    ``parent[s][v]`` is the predecessor of v on the chosen shortest path
    from s (-1 for v == s). Immutable after construction.
    """

    dist: np.ndarray
    parent: np.ndarray

    def path(self, s: int, t: int) -> list[int]:
        """Vertex sequence of the stored shortest path from s to t."""
        if self.parent[s][t] < 0 and s != t:
            raise InstanceError(f"no path between vertex {s + 1} and vertex {t + 1}")
        seq = [t]
        while seq[-1] != s:
            seq.append(int(self.parent[s][seq[-1]]))
        seq.reverse()
        return seq


def dijkstra_all(instance: Instance) -> ShortestPathTable:
    """Exact all-pairs shortest paths, one Dijkstra run per source.

    Deterministic: neighbors are relaxed in ascending vertex id and ties
    keep the smallest predecessor, so reconstructed paths are stable.
    """
    n = instance.n_vertices
    adj = instance.adjacency()
    costs = [e.cost for e in instance.edges]
    dist = np.full((n, n), np.inf)
    parent = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        d = dist[s]
        p = parent[s]
        d[s] = 0.0
        heap: list[tuple[float, int]] = [(0.0, s)]
        done = np.zeros(n, dtype=bool)
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, k in adj[u]:
                nd = du + costs[k]
                if nd < d[v]:
                    d[v] = nd
                    p[v] = u
                    heapq.heappush(heap, (nd, v))
                elif nd == d[v] and not done[v] and u < p[v]:
                    p[v] = u
        if not done.all():
            missing = int(np.flatnonzero(~done)[0])
            raise InstanceError(
                f"graph is disconnected: no path between vertex {s + 1} "
                f"and vertex {missing + 1}"
            )
    dist.setflags(write=False)
    parent.setflags(write=False)
    return ShortestPathTable(dist, parent)


def reachable_from(arc_support: set[tuple[int, int]], source: int) -> set[int]:
    """Vertices reachable from ``source`` following directed arcs.

    The source is always included; an empty support yields {source}.
    """
    out: dict[int, list[int]] = {}
    for u, v in arc_support:
        out.setdefault(u, []).append(v)
    seen = {source}
    frontier = [source]
    while frontier:
        u = frontier.pop()
        for v in out.get(u, ()):
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    return seen


def required_edges(instance: Instance) -> list[Edge]:
    """Edges with positive demand, sorted by (i, j)."""
    return [e for e in instance.edges if e.demand > EPS]
