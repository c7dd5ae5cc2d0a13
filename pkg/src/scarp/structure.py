"""Solution structure tools: support classes, spray cycle cancellation,
feasibility verification and the exhaustive optimum used as test oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .formulation import multi_robot_count, robot_count
from .graph import Instance, dijkstra_all, make_instance
from .solution import (Route, Solution, closed_walk_from_arcs, make_solution,
                       singleton_route_cost)

SUPPORT_TOL = 1e-9          # strict positivity threshold for spray support
CYCLE_MIN = 1e-7            # spray links below this are left out of cycles
VERIFY_TOL = 1e-5


def counterexample_instance() -> Instance:
    """Four-vertex instance showing that forcing a full-tank trip on the
    oversized edge (demand 12 > capacity 8) is suboptimal."""
    return make_instance(
        "counterexample", 4,
        [(1, 2, 1.0, 1.0), (2, 3, 1.0, 12.0), (3, 4, 1.0, 1.0),
         (1, 3, 1.0, 1.0), (1, 4, 1.0, 1.0)],
        capacity=8.0, depot=1)


# ---------------------------------------------------------------------------
# support classification and cycle cancellation


@dataclass(frozen=True)
class SupportClasses:
    unused: tuple[int, ...]
    singleton: tuple[int, ...]
    multi: tuple[int, ...]


def support_classes(y_maps) -> SupportClasses:
    """Partition robots by support size: empty, one edge, two or more."""
    r0, r1, r2 = [], [], []
    for r, sprays in enumerate(y_maps):
        size = sum(1 for amt in sprays.values() if amt > SUPPORT_TOL)
        (r0 if size == 0 else r1 if size == 1 else r2).append(r)
    return SupportClasses(tuple(r0), tuple(r1), tuple(r2))


@dataclass(frozen=True)
class SprayBipartite:
    """Incidence between robots and the edges they spray."""

    links: frozenset[tuple[int, int]]   # (robot, edge index)

    def robot_degree(self, robot: int) -> int:
        return sum(1 for r, _ in self.links if r == robot)


def spray_bipartite(y_maps, threshold: float = SUPPORT_TOL) -> SprayBipartite:
    links = set()
    for r, sprays in enumerate(y_maps):
        for e, amt in sprays.items():
            if amt > threshold:
                links.add((r, e))
    return SprayBipartite(frozenset(links))


def _find_spray_cycle(y_maps, robots: tuple[int, ...]) -> list[tuple[int, int]] | None:
    """A cycle in the robot/edge incidence graph restricted to the given
    robots, returned as an alternating list of (robot, edge) links."""
    edge_robots: dict[int, list[int]] = {}
    robot_edges: dict[int, list[int]] = {}
    for r in robots:
        for e, amt in sorted(y_maps[r].items()):
            if amt > CYCLE_MIN:
                robot_edges.setdefault(r, []).append(e)
                edge_robots.setdefault(e, []).append(r)
    # DFS over nodes ("r", i) / ("e", k); a back link closes a cycle.
    visited: set[tuple[str, int]] = set()
    for start in sorted(robot_edges):
        if ("r", start) in visited:
            continue
        stack = [(("r", start), None)]
        parent: dict[tuple[str, int], tuple[str, int] | None] = {("r", start): None}
        while stack:
            node, came_from = stack.pop()
            if node in visited:
                continue
            visited.add(node)
            kind, ident = node
            nbrs = (robot_edges.get(ident, []) if kind == "r"
                    else edge_robots.get(ident, []))
            other = "e" if kind == "r" else "r"
            for nb in nbrs:
                nxt = (other, nb)
                if nxt == came_from:
                    continue
                if nxt in parent and nxt in visited:
                    # Found a cycle: walk both chains up to their join.
                    chain_a = [node]
                    while parent[chain_a[-1]] is not None:
                        chain_a.append(parent[chain_a[-1]])
                    chain_b = [nxt]
                    while parent[chain_b[-1]] is not None:
                        chain_b.append(parent[chain_b[-1]])
                    set_a = {n: k for k, n in enumerate(chain_a)}
                    join = next(n for n in chain_b if n in set_a)
                    path_a = chain_a[:set_a[join] + 1]
                    path_b = chain_b[:chain_b.index(join)]
                    cycle_nodes = path_a + list(reversed(path_b))
                    return _links_of_cycle(cycle_nodes)
                if nxt not in parent:
                    parent[nxt] = node
                    stack.append((nxt, node))
    return None


def _links_of_cycle(nodes) -> list[tuple[int, int]]:
    links = []
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        robot = a[1] if a[0] == "r" else b[1]
        edge = a[1] if a[0] == "e" else b[1]
        links.append((robot, edge))
    return links


def cancel_cycles(instance: Instance, solution: Solution) -> Solution:
    """Shift sprays around cycles of the robot/edge incidence graph until
    it is acyclic, zeroing one spray entry per cycle.

    Per-edge totals and per-robot totals are preserved exactly, so
    feasibility and the travel cost are untouched (routes stay fixed).
    Afterwards fewer robots than edges spray multiple edges.
    """
    report = verify_solution(instance, solution, solution.formulation)
    if not report.feasible:
        raise ValueError(f"cannot cancel cycles of an infeasible solution: "
                         f"{report.violations}")
    y_maps = [dict(route.sprays) for route in solution.routes]
    while True:
        multi = support_classes(y_maps).multi
        cycle = _find_spray_cycle(y_maps, multi)
        if cycle is None:
            break
        # Alternate +delta / -delta along consecutive links; each robot and
        # each edge gets one of each, so row sums are unchanged.
        minus = cycle[1::2]
        delta = min(y_maps[r][e] for r, e in minus)
        for k, (r, e) in enumerate(cycle):
            if k % 2 == 0:
                y_maps[r][e] = y_maps[r].get(e, 0.0) + delta
            else:
                left = y_maps[r][e] - delta
                if left <= SUPPORT_TOL:
                    del y_maps[r][e]
                else:
                    y_maps[r][e] = left
    routes = [Route(route.robot, route.vertices, y_maps[r])
              for r, route in enumerate(solution.routes)]
    spt = dijkstra_all(instance) if solution.singletons else None
    return make_solution(instance, routes, solution.formulation,
                         solution.singletons, spt)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerifyReport:
    feasible: bool
    violations: tuple[str, ...]
    cost: float


def verify_solution(instance: Instance, solution: Solution,
                    formulation_tag: str | None = None) -> VerifyReport:
    """Check a solution against every model requirement: route structure,
    capacity, demand coverage, spray/traversal linking, flow conservation,
    depot-rooted connectivity, and singleton-count integrality/bounds."""
    tag = formulation_tag or solution.formulation
    problems: list[str] = []
    P = instance.capacity
    idx = instance.edge_index()
    fleet = robot_count(instance) if tag == "basic" else multi_robot_count(instance)
    if len(solution.routes) > fleet:
        problems.append(f"fleet: {len(solution.routes)} routes exceed the "
                        f"{fleet}-robot fleet")

    sprayed = {k: 0.0 for k in range(instance.n_edges)}
    for route in solution.routes:
        r = route.robot + 1
        arcs = route.arc_multiset()
        if route.vertices[0] != instance.depot or route.vertices[-1] != instance.depot:
            problems.append(f"route[r{r}]: walk does not start and end at the depot")
        for a, b in arcs:
            key = (a, b) if a < b else (b, a)
            if key not in idx:
                problems.append(f"route[r{r}]: arc ({a + 1},{b + 1}) is not an edge")
        degree: dict[int, int] = {}
        for (a, b), mult in arcs.items():
            degree[a] = degree.get(a, 0) + mult
            degree[b] = degree.get(b, 0) - mult
        if any(d != 0 for d in degree.values()):
            problems.append(f"route[r{r}]: flow conservation violated")
        if arcs:
            seen = {instance.depot}
            frontier = [instance.depot]
            out: dict[int, list[int]] = {}
            for (a, b) in arcs:
                out.setdefault(a, []).append(b)
            while frontier:
                v = frontier.pop()
                for w in out.get(v, ()):
                    if w not in seen:
                        seen.add(w)
                        frontier.append(w)
            if any(a not in seen for (a, b) in arcs):
                problems.append(f"route[r{r}]: connectivity: arc support not "
                                "reachable from the depot")
        total = 0.0
        for k, amt in route.sprays.items():
            if amt < -VERIFY_TOL:
                problems.append(f"spray[r{r}]: negative amount on edge {k + 1}")
            total += amt
            e = instance.edges[k]
            covered = arcs.get((e.i, e.j), 0) + arcs.get((e.j, e.i), 0)
            if amt > P * covered + VERIFY_TOL:
                problems.append(
                    f"linking: r{r} sprays edge ({e.i + 1},{e.j + 1}) "
                    "without covering it")
            sprayed[k] += amt
        if total > P + VERIFY_TOL:
            problems.append(f"capacity: r{r} sprays {total:.6g} > {P:.6g}")

    for k, e in enumerate(instance.edges):
        got = sprayed[k]
        if tag == "large":
            got += solution.singletons.get(k, 0) * P
            if got < e.demand - VERIFY_TOL:
                problems.append(
                    f"demand: edge ({e.i + 1},{e.j + 1}) covered {got:.6g} "
                    f"< {e.demand:.6g}")
        else:
            if abs(got - e.demand) > VERIFY_TOL:
                problems.append(
                    f"demand: edge ({e.i + 1},{e.j + 1}) sprayed {got:.6g} "
                    f"!= {e.demand:.6g}")

    if tag == "basic" and solution.singletons:
        problems.append("singletons are only valid for the large formulation")
    for k, count in solution.singletons.items():
        e = instance.edges[k]
        if count != int(count) or count < 0:
            problems.append(f"singleton count on edge ({e.i + 1},{e.j + 1}) "
                            "must be a non-negative integer")
        elif count > e.demand / P + VERIFY_TOL:
            problems.append(f"singleton count {count} on edge "
                            f"({e.i + 1},{e.j + 1}) exceeds demand/capacity")

    return VerifyReport(not problems, tuple(problems), solution.objective)


# ---------------------------------------------------------------------------
# exhaustive optimum (test oracle)


class OracleRefusal(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class CandidateRoute:
    arcs: frozenset[tuple[int, int]]
    coverage: frozenset[int]
    cost: float


def enumerate_routes(instance: Instance, cost_cap: float | None = None
                     ) -> list[CandidateRoute]:
    """Every balanced, depot-connected set of directed arcs (each arc used
    at most once), i.e. every closed walk a single robot can drive."""
    if instance.n_edges > 9:
        raise OracleRefusal(
            f"{instance.n_edges} edges is beyond exhaustive enumeration (max 9)")
    arcs = instance.arcs()
    idx = instance.edge_index()
    req = [k for k, e in enumerate(instance.edges) if e.demand > 1e-12]
    req_pos = {k: b for b, k in enumerate(req)}
    n_arcs = len(arcs)
    cost_vec = np.array([instance.edges[idx[(min(a), max(a))]].cost for a in arcs])
    net = np.zeros((n_arcs, instance.n_vertices), dtype=np.int8)
    for p, (u, v) in enumerate(arcs):
        net[p][u] -= 1
        net[p][v] += 1
    masks = np.arange(1, 1 << n_arcs, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n_arcs)) & 1).astype(np.int8)
    balanced = np.flatnonzero(~(bits @ net).any(axis=1))
    costs = bits @ cost_vec
    routes = [CandidateRoute(frozenset(), frozenset(), 0.0)]
    for row in balanced:
        cost = float(costs[row])
        if cost_cap is not None and cost > cost_cap + 1e-9:
            continue
        chosen = [arcs[p] for p in np.flatnonzero(bits[row])]
        support = set(chosen)
        reach = {instance.depot}
        frontier = [instance.depot]
        out: dict[int, list[int]] = {}
        for u, v in chosen:
            out.setdefault(u, []).append(v)
        while frontier:
            u = frontier.pop()
            for v in out.get(u, ()):
                if v not in reach:
                    reach.add(v)
                    frontier.append(v)
        if any(u not in reach for u, _ in chosen):
            continue
        coverage = set()
        for u, v in chosen:
            k = idx[(min(u, v), max(u, v))]
            if k in req_pos:
                coverage.add(k)
        routes.append(CandidateRoute(frozenset(support), frozenset(coverage), cost))
    return routes


def _spray_flow(demands: dict[int, float], slots: list[tuple[frozenset[int], float]]
                ) -> list[dict[int, float]] | None:
    """Feasible spray split of ``demands`` over the covering slots, or None.

    Max-flow on the edge/robot transportation network: source -> edge
    (capacity = demand), edge -> every covering robot, robot -> sink
    (capacity = remaining tank). Feasible iff all demands saturate.
    """
    need = {e: d for e, d in demands.items() if d > 1e-9}
    if not need:
        return [dict() for _ in slots]
    edge_ids = sorted(need)
    # Node numbering: 0 source, 1..E edges, E+1..E+S robots, E+S+1 sink.
    n_e, n_s = len(edge_ids), len(slots)
    src, sink = 0, n_e + n_s + 1
    cap: dict[tuple[int, int], float] = {}
    adj: dict[int, list[int]] = {v: [] for v in range(sink + 1)}

    def arc(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0.0) + c
        cap.setdefault((v, u), 0.0)
        if v not in adj[u]:
            adj[u].append(v)
        if u not in adj[v]:
            adj[v].append(u)

    for p, e in enumerate(edge_ids):
        arc(src, 1 + p, need[e])
    for s, (cov, tank) in enumerate(slots):
        if tank > 1e-12:
            arc(1 + n_e + s, sink, tank)
        for p, e in enumerate(edge_ids):
            if e in cov:
                arc(1 + p, 1 + n_e + s, float("inf"))

    total = sum(need.values())
    pushed = 0.0
    while True:
        # BFS for a shortest augmenting path (Edmonds-Karp).
        prev = {src: src}
        queue = [src]
        while queue and sink not in prev:
            u = queue.pop(0)
            for v in adj[u]:
                if v not in prev and cap.get((u, v), 0.0) > 1e-12:
                    prev[v] = u
                    queue.append(v)
        if sink not in prev:
            break
        path = [sink]
        while path[-1] != src:
            path.append(prev[path[-1]])
        path.reverse()
        bottleneck = min(cap[(u, v)] for u, v in zip(path, path[1:]))
        for u, v in zip(path, path[1:]):
            cap[(u, v)] -= bottleneck
            cap[(v, u)] += bottleneck
        pushed += bottleneck
    if pushed < total - 1e-7:
        return None
    out: list[dict[int, float]] = [dict() for _ in slots]
    for p, e in enumerate(edge_ids):
        for s in range(n_s):
            back = cap.get((1 + n_e + s, 1 + p), 0.0)
            if back > 1e-9:
                out[s][e] = back
    return out


def brute_force_solve(instance: Instance, formulation: str = "basic",
                      max_walk_cost: float | None = None,
                      spray_overrides: dict[tuple[int, int], float] | None = None,
                      ) -> Solution:
    """Provably optimal solution of either formulation by enumerating every
    (route multiset, singleton vector) in increasing cost order and taking
    the first one admitting a feasible spray split.

    ``spray_overrides`` pins y[robot, edge] to an amount (robot 0-based,
    edge by index). Only tiny instances are accepted.
    """
    n_rob = robot_count(instance) if formulation == "basic" else multi_robot_count(instance)
    if n_rob > 3:
        raise OracleRefusal(f"{n_rob} robots is beyond exhaustive enumeration (max 3)")
    P = instance.capacity
    spt = dijkstra_all(instance)
    routes = enumerate_routes(instance, cost_cap=max_walk_cost)
    # Keep only the cheapest route per coverage class; any more expensive
    # route with the same coverage is dominated.
    best_by_cov: dict[frozenset[int], CandidateRoute] = {}
    for cand in routes:
        cur = best_by_cov.get(cand.coverage)
        if cur is None or cand.cost < cur.cost - 1e-12:
            best_by_cov[cand.coverage] = cand
    pool = sorted(best_by_cov.values(), key=lambda c: (c.cost, sorted(c.coverage)))

    overrides = spray_overrides or {}
    for (r, _e), amt in overrides.items():
        if r >= n_rob:
            raise ValueError(f"override references robot {r + 1} > fleet {n_rob}")
        if amt < -1e-12 or amt > P + 1e-12:
            raise ValueError("override amount outside [0, capacity]")

    req = [k for k, e in enumerate(instance.edges) if e.demand > 1e-12]
    z_choices: list[dict[int, int]] = [{}]
    if formulation == "large":
        ranges = []
        for k in req:
            hi = int(math.floor(instance.edges[k].demand / P + 1e-9))
            ranges.append([(k, z) for z in range(hi + 1)])
        z_choices = [dict(kv for kv in combo if kv[1])
                     for combo in itertools.product(*ranges)]

    if overrides:
        assignments = itertools.product(pool, repeat=n_rob)
    else:
        assignments = itertools.combinations_with_replacement(pool, n_rob)

    candidates = []
    for combo in assignments:
        base = sum(c.cost for c in combo)
        candidates.append((base, combo))
    candidates.sort(key=lambda t: t[0])

    z_list = []
    for z in z_choices:
        zc = sum(cnt * singleton_route_cost(instance, spt, k) for k, cnt in z.items())
        z_list.append((zc, z))
    z_list.sort(key=lambda t: t[0])

    best: tuple[float, tuple[CandidateRoute, ...], dict[int, int],
                list[dict[int, float]]] | None = None
    for zc, z in z_list:
        if best is not None and zc >= best[0] - 1e-12:
            break
        for base, combo in candidates:
            total = base + zc
            if best is not None and total >= best[0] - 1e-12:
                break
            split = _allocation(instance, combo, z, overrides, P, formulation)
            if split is not None:
                best = (total, combo, z, split)
                break
    if best is None:
        raise ValueError("no feasible solution exists (overrides too strict?)")

    total, combo, z, split = best
    out_routes = []
    for r, cand in enumerate(combo):
        walk = closed_walk_from_arcs({a: 1 for a in cand.arcs}, instance.depot)
        sprays = dict(split[r])
        for (ro, e), amt in overrides.items():
            if ro == r and amt > 1e-12:
                sprays[e] = sprays.get(e, 0.0) + amt
        out_routes.append(Route(r, tuple(walk), sprays))
    return make_solution(instance, out_routes, formulation, z, spt)


def _allocation(instance, combo, z, overrides, P, formulation):
    """Residual transportation problem after singletons and pinned sprays."""
    need = {}
    for k, e in enumerate(instance.edges):
        if e.demand > 1e-12:
            need[k] = e.demand - z.get(k, 0) * P
    caps = [P for _ in combo]
    for (r, e), amt in overrides.items():
        if amt > 1e-12 and e not in combo[r].coverage:
            return None
        caps[r] -= amt
        if caps[r] < -1e-9:
            return None
        if e in need:
            need[e] -= amt
    for e in list(need):
        if need[e] < -1e-9 and formulation == "basic":
            # The basic coverage rows are equalities: overshoot is infeasible.
            return None
        need[e] = max(0.0, need[e])
    slots = [(c.coverage, caps[r]) for r, c in enumerate(combo)]
    return _spray_flow(need, slots)
