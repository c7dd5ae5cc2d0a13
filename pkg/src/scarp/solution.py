"""Route and solution value types shared by the search, repair and checks."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Instance, ShortestPathTable


@dataclass(frozen=True)
class Route:
    """One robot's closed walk plus its spray amounts.

    ``vertices`` is the 0-based walk starting and ending at the depot
    (a bare ``(depot,)`` marks an unused robot). ``sprays`` maps edge
    index -> sprayed amount.
    """

    robot: int
    vertices: tuple[int, ...]
    sprays: dict[int, float] = field(default_factory=dict)

    def arc_multiset(self) -> dict[tuple[int, int], int]:
        arcs: dict[tuple[int, int], int] = {}
        for a, b in zip(self.vertices, self.vertices[1:]):
            arcs[(a, b)] = arcs.get((a, b), 0) + 1
        return arcs

    def cost(self, instance: Instance) -> float:
        idx = instance.edge_index()
        total = 0.0
        for a, b in zip(self.vertices, self.vertices[1:]):
            key = (a, b) if a < b else (b, a)
            total += instance.edges[idx[key]].cost
        return total


@dataclass(frozen=True)
class Solution:
    """Integral incumbent: one route per robot, singleton counts for the
    large-demands formulation, and the total travel cost."""

    routes: tuple[Route, ...]
    formulation: str = "basic"
    singletons: dict[int, int] = field(default_factory=dict)
    objective: float = 0.0

    @property
    def n_robots(self) -> int:
        return len(self.routes)


def singleton_route_cost(instance: Instance, spt: ShortestPathTable, edge_idx: int) -> float:
    """Cost of a dedicated out-and-back trip servicing one edge."""
    e = instance.edges[edge_idx]
    d = instance.depot
    return float(spt.dist[d][e.i] + e.cost + spt.dist[e.j][d])


def solution_cost(instance: Instance, spt: ShortestPathTable | None,
                  routes: tuple[Route, ...], singletons: dict[int, int]) -> float:
    total = sum(r.cost(instance) for r in routes)
    for k, count in singletons.items():
        if count:
            if spt is None:
                raise ValueError("singleton counts need a shortest-path table")
            total += count * singleton_route_cost(instance, spt, k)
    return float(total)


def make_solution(instance: Instance, routes: list[Route], formulation: str = "basic",
                  singletons: dict[int, int] | None = None,
                  spt: ShortestPathTable | None = None) -> Solution:
    singles = {k: int(v) for k, v in (singletons or {}).items() if int(v)}
    obj = solution_cost(instance, spt, tuple(routes), singles)
    return Solution(tuple(routes), formulation, singles, obj)


def closed_walk_from_arcs(arcs: dict[tuple[int, int], int], start: int) -> list[int]:
    """Assemble a closed walk from a balanced, connected arc multiset.

    Hierholzer's construction with a smallest-head tie-break, so the walk
    is deterministic. Raises ValueError if the arcs do not form a single
    start-rooted Eulerian structure.
    """
    remaining = {a: int(mult) for a, mult in arcs.items() if mult > 0}
    if not remaining:
        return [start]
    total = sum(remaining.values())
    heads: dict[int, list[int]] = {}
    for (u, v), mult in remaining.items():
        heads.setdefault(u, []).extend([v] * mult)
    for u in heads:
        heads[u].sort(reverse=True)  # pop() takes the smallest head
    stack = [start]
    circuit: list[int] = []
    used = 0
    while stack:
        v = stack[-1]
        if heads.get(v):
            stack.append(heads[v].pop())
            used += 1
        else:
            circuit.append(stack.pop())
    if used != total:
        raise ValueError("arc multiset is not connected to the start vertex")
    circuit.reverse()
    if circuit[0] != start or circuit[-1] != start:
        raise ValueError("arc multiset is not balanced at the start vertex")
    return circuit
