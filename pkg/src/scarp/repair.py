"""Greedy routing repair: turn any relaxation point with feasible spray
amounts into an integral incumbent candidate, plus the give-up counter
that disables the heuristic after too many rejected attempts."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .graph import Instance, ShortestPathTable
from .solution import Route, closed_walk_from_arcs, make_solution
from .structure import verify_solution

ACCEPT_TOL = 1e-9
SUPPORT_TOL = 1e-9


@dataclass
class RepairState:
    """Acceptance bookkeeping: disabled for good once ``gamma`` consecutive
    offers were rejected (gamma = 0 disables repair from the start)."""

    gamma: int
    consecutive_rejections: int = 0
    accepted_count: int = 0

    @property
    def enabled(self) -> bool:
        return 0 <= self.consecutive_rejections < self.gamma


def offer(state: RepairState, candidate_cost: float | None,
          incumbent_cost: float) -> str:
    """Decide accept/reject/disabled for a repair candidate.

    ``candidate_cost`` is None when the repair itself failed; that counts
    as a rejection. Accepts only strict improvements.
    """
    if not state.enabled:
        return "disabled"
    if candidate_cost is not None and candidate_cost < incumbent_cost - ACCEPT_TOL:
        state.consecutive_rejections = 0
        state.accepted_count += 1
        return "accept"
    state.consecutive_rejections += 1
    return "reject"


def connectable_path(y_r: dict[tuple[int, int], float], spt: ShortestPathTable,
                     depot: int, anchor: str = "position") -> list[int]:
    """Closed walk from the depot covering every positively-sprayed edge.

    Greedy: jump (by shortest path) to the closest endpoint of an
    uncovered support edge, traverse one incident support edge (forward
    orientation first, reverse otherwise), repeat, then return home.
    ``anchor`` picks whether "closest" is measured from the walk's current
    end (default) or always from the depot.
    """
    remaining = {e for e, amt in sorted(y_r.items()) if amt > SUPPORT_TOL}
    walk = [depot]
    cur = depot
    while remaining:
        base = cur if anchor == "position" else depot
        candidates = sorted({v for e in remaining for v in e})
        v = min(candidates, key=lambda w: (spt.dist[base][w], w))
        if v != cur:
            walk.extend(spt.path(cur, v)[1:])
            cur = v
        forward = sorted(j for (i, j) in remaining if i == v)
        if forward:
            nxt = forward[0]
            remaining.discard((v, nxt))
        else:
            reverse = sorted(i for (i, j) in remaining if j == v)
            nxt = reverse[0]
            remaining.discard((nxt, v))
        walk.append(nxt)
        cur = nxt
    if cur != depot:
        walk.extend(spt.path(cur, depot)[1:])
    return walk


def remove_duplicate(walk: list[int], support: set[tuple[int, int]],
                     depot: int) -> list[tuple[int, int]]:
    """Arc list of the walk with out-and-back detours cancelled.

    An arc traversed twice in the same direction is dropped together with
    one reverse traversal (the only balance-preserving reduction), but only
    when the remaining arcs stay depot-connected and still cover every
    support edge. Processed greedily in walk order.
    """
    arcs = list(zip(walk, walk[1:]))
    counts = Counter(arcs)

    def acceptable(c: Counter) -> bool:
        for i, j in support:
            if not (c[(i, j)] or c[(j, i)]):
                return False
        live = +c
        if not live:
            return not support
        reach = {depot}
        frontier = [depot]
        out: dict[int, list[int]] = {}
        for (a, b) in live:
            out.setdefault(a, []).append(b)
        while frontier:
            u = frontier.pop()
            for w in out.get(u, ()):
                if w not in reach:
                    reach.add(w)
                    frontier.append(w)
        return all(a in reach for (a, b) in live)

    changed = True
    while changed:
        changed = False
        for arc in arcs:
            rev = (arc[1], arc[0])
            if counts[arc] >= 2 and counts[rev] >= 1:
                trial = counts.copy()
                trial[arc] -= 1
                trial[rev] -= 1
                if acceptable(trial):
                    counts = trial
                    arcs = list(counts.elements())
                    changed = True
                    break
    return sorted(counts.elements())


def greedy_routing(y_maps: list[dict[int, float]], z_map: dict[int, float],
                   instance: Instance, spt: ShortestPathTable,
                   formulation: str = "basic", anchor: str = "position"):
    """Build a verified integral solution from per-robot spray amounts.

    The sprays are kept as-is (they already satisfy capacity and coverage);
    routes are rebuilt greedily per robot, fractional singleton counts are
    rounded up, and robots are reordered/oriented to match the symmetry
    rows. Returns None when the result fails verification.
    """
    depot = instance.depot
    routes = []
    for r, sprays in enumerate(y_maps):
        support_pairs = {}
        clean = {}
        for k, amt in sprays.items():
            if amt > SUPPORT_TOL:
                e = instance.edges[k]
                support_pairs[(e.i, e.j)] = amt
                clean[k] = float(amt)
        if not support_pairs:
            routes.append(Route(r, (depot,), {}))
            continue
        walk = connectable_path(support_pairs, spt, depot, anchor)
        arcs = remove_duplicate(walk, set(support_pairs), depot)
        try:
            vertices = closed_walk_from_arcs(Counter(arcs), depot)
        except ValueError:
            return None
        routes.append(Route(r, tuple(vertices), clean))

    singles: dict[int, int] = {}
    if formulation == "large":
        for k, frac in z_map.items():
            count = int(math.ceil(frac - 1e-6))
            if count > 0:
                singles[k] = count

    routes.sort(key=lambda rt: (rt.cost(instance), rt.vertices))
    routes = [_orient(Route(r, rt.vertices, rt.sprays)) for r, rt in enumerate(routes)]
    candidate = make_solution(instance, routes, formulation, singles,
                              spt if singles else None)
    report = verify_solution(instance, candidate, formulation)
    if not report.feasible:
        return None
    return candidate


def _orient(route: Route) -> Route:
    """Reverse the walk when the return arc enters the depot from a lower
    neighbor than every departure, if reversing fixes that."""
    v = route.vertices
    if len(v) < 3:
        return route
    if _oriented_ok(v):
        return route
    rev = tuple(reversed(v))
    if _oriented_ok(rev):
        return Route(route.robot, rev, route.sprays)
    return route


def _oriented_ok(v: tuple[int, ...]) -> bool:
    depot = v[0]
    departures = [b for a, b in zip(v, v[1:]) if a == depot]
    returns = [a for a, b in zip(v, v[1:]) if b == depot]
    return min(departures) <= min(returns)
