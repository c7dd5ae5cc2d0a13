"""Branch-and-cut search over the spray-routing relaxations.

Best-bound-first branch and bound with lazy connectivity separation, the
greedy repair heuristic as a primal source, and an exchangeable LP
backend (the bundled bounded simplex by default). Single-worker runs are
fully deterministic; with more workers the open-node pool, the incumbent
and the cut pool are the only shared state, each updated under one lock.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import random
import threading
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import simplex
from .formulation import (Model, Row, connectivity_row,
                          enumerate_connectivity_rows, gap_percent)
from .graph import Instance, ShortestPathTable, dijkstra_all, reachable_from
from .repair import RepairState, greedy_routing, offer
from .solution import Route, Solution, closed_walk_from_arcs, make_solution
from .structure import verify_solution

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
CUT_VIOLATION_TOL = 1e-6


@dataclass(frozen=True)
class SolveParams:
    """Search knobs; defaults follow the methodology's standing choices."""

    time_limit_s: float = 7200.0
    gap_tol: float = 1e-6
    gamma: int = 3000
    cut_depth_max: int = 10
    cut_gap_min: float = 0.01
    support_threshold: float = 1e-6
    node_order: str = "best"
    workers: int = 1
    seed: int | None = None
    lazy_cuts: bool = True
    repair: bool = True
    repair_anchor: str = "position"
    max_cut_rounds: int = 20
    lp_backend: str = "reference"


@dataclass(frozen=True)
class Cut:
    """Connectivity cut for one robot: sprays inside the depot-free set
    ``inside`` must be matched by capacity on arcs crossing into it."""

    robot: int
    inside: frozenset[int]

    def key(self) -> tuple[int, frozenset[int]]:
        return (self.robot, self.inside)


@dataclass
class NodeSolution:
    """LP point at a branch-and-bound node (x may be fractional)."""

    model: Model
    values: np.ndarray
    value: float
    depth: int
    bounds: dict[int, tuple[float, float]]

    def x_value(self, robot: int, arc: tuple[int, int]) -> float:
        return float(self.values[self.model.vindex.x(robot, arc)])

    def x_support(self, robot: int, threshold: float) -> set[tuple[int, int]]:
        vx = self.model.vindex
        return {a for a in vx.arcs if self.values[vx.x(robot, a)] > threshold}

    def y_map(self, robot: int) -> dict[int, float]:
        vx = self.model.vindex
        return {e: float(self.values[vx.y(robot, e)]) for e in vx.y_edges
                if self.values[vx.y(robot, e)] > 1e-9}

    def z_map(self) -> dict[int, float]:
        vx = self.model.vindex
        return {e: float(self.values[vx.z(e)]) for e in vx.z_edges
                if self.values[vx.z(e)] > 1e-9}


@dataclass(frozen=True)
class SolveReport:
    status: str                       # optimal | feasible | infeasible | limit
    solution: Solution | None
    ub: float | None
    lb: float
    gap_percent: float | None
    explored_nodes: int
    simplex_iterations: int
    accepted_heuristics: int
    trace: tuple[tuple[float, float, float | None, int, int], ...]
    wall_time_s: float
    formulation: str
    robots: int
    cuts: tuple[Cut, ...] = ()

    def result_dict(self) -> dict:
        """Deterministic fields only (no wall-clock), for reports/tests."""
        return {
            "status": self.status,
            "objective": self.ub,
            "lower_bound": self.lb,
            "gap_percent": self.gap_percent,
            "explored_nodes": self.explored_nodes,
            "simplex_iterations": self.simplex_iterations,
            "accepted_heuristics": self.accepted_heuristics,
            "formulation": self.formulation,
            "robots": self.robots,
        }


def separate_connectivity(node: NodeSolution, instance: Instance,
                          support_threshold: float = 1e-6) -> list[Cut]:
    """Violated connectivity cuts at an LP point, one per robot.

    For each robot, vertices unreachable from the depot through the
    positive part of x form the candidate set; a cut is emitted when the
    robot sprays more inside that set than the crossing capacity allows.
    """
    model = node.model
    vx = model.vindex
    P = instance.capacity
    cuts = []
    n = instance.n_vertices
    for r in range(vx.n_robots):
        support = node.x_support(r, support_threshold)
        reach = reachable_from(support, instance.depot)
        if len(reach) == n:
            continue
        inside = frozenset(range(n)) - reach
        y_in = 0.0
        for e in vx.y_edges:
            edge = instance.edges[e]
            if edge.i in inside and edge.j in inside:
                y_in += node.values[vx.y(r, e)]
        x_cross = 0.0
        for a in vx.arcs:
            if a[0] not in inside and a[1] in inside:
                x_cross += node.values[vx.x(r, a)]
        if y_in > P * x_cross + CUT_VIOLATION_TOL:
            cuts.append(Cut(r, inside))
    return cuts


def branch(node: NodeSolution) -> tuple[int, tuple[float, float], tuple[float, float]]:
    """Pick the integer column whose fraction is closest to one half.

    Returns (column, floor-child bounds, ceil-child bounds); raises on an
    integral point.
    """
    model = node.model
    best_col = -1
    best_score = 2.0
    for col in np.flatnonzero(model.is_integer):
        v = node.values[col]
        frac = v - math.floor(v)
        if min(frac, 1.0 - frac) <= INT_TOL:
            continue
        score = abs(frac - 0.5)
        if score < best_score - 1e-12:
            best_score = score
            best_col = int(col)
    if best_col < 0:
        raise ValueError("branch() called on an integral point")
    lo, hi = node.bounds.get(best_col,
                             (float(model.lower[best_col]), float(model.upper[best_col])))
    v = node.values[best_col]
    return best_col, (lo, float(math.floor(v))), (float(math.ceil(v)), hi)


class _Workspace:
    """Dense LP data for one model plus the growing cut pool."""

    def __init__(self, model: Model, eager_rows: list[Row], backend: str):
        n = model.vindex.n_cols()
        rows = list(model.rows) + eager_rows
        self.A = np.zeros((len(rows), n))
        self.senses = [row.sense for row in rows]
        self.b = np.array([row.rhs for row in rows])
        for ri, row in enumerate(rows):
            for col, coef in row.coeffs:
                self.A[ri, col] += coef
        self.model = model
        self.backend = backend
        self.integral_objective = False
        self.cut_keys: set = set()
        self.cut_objs: list[Cut] = []
        self.cut_rows: list[np.ndarray] = []
        self.cut_senses: list[str] = []
        self.cut_rhs: list[float] = []

    def add_cut(self, instance: Instance, cut: Cut) -> bool:
        if cut.key() in self.cut_keys:
            return False
        row = connectivity_row(instance, self.model.vindex, cut.robot, cut.inside)
        dense = np.zeros(self.A.shape[1])
        for col, coef in row.coeffs:
            dense[col] += coef
        self.cut_keys.add(cut.key())
        self.cut_objs.append(cut)
        self.cut_rows.append(dense)
        self.cut_senses.append(row.sense)
        self.cut_rhs.append(row.rhs)
        return True

    def solve(self, bounds: dict[int, tuple[float, float]], n_cuts: int):
        lb = self.model.lower.copy()
        ub = self.model.upper.copy()
        for col, (lo, hi) in bounds.items():
            lb[col] = lo
            ub[col] = hi
        if n_cuts:
            A = np.vstack([self.A] + self.cut_rows[:n_cuts])
            senses = self.senses + self.cut_senses[:n_cuts]
            b = np.concatenate([self.b, self.cut_rhs[:n_cuts]])
        else:
            A, senses, b = self.A, self.senses, self.b
        if self.backend == "reference":
            return simplex.solve_lp(self.model.objective, A, senses, b, lb, ub)
        return _scipy_solve(self.model.objective, A, senses, b, lb, ub)


def _scipy_solve(c, A, senses, b, lb, ub):
    """Optional faster backend behind the same contract (needs scipy)."""
    from scipy.optimize import linprog

    senses = list(senses)
    le = [i for i, s in enumerate(senses) if s == "<="]
    ge = [i for i, s in enumerate(senses) if s == ">="]
    eq = [i for i, s in enumerate(senses) if s == "="]
    A_ub = np.vstack([A[le], -A[ge]]) if le or ge else None
    b_ub = np.concatenate([b[le], -b[ge]]) if le or ge else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub,
                  A_eq=A[eq] if eq else None, b_eq=b[eq] if eq else None,
                  bounds=list(zip(lb, ub)), method="highs")
    if res.status == 2:
        return simplex.LpResult(simplex.INFEASIBLE, np.inf, None, int(res.nit))
    if res.status == 3:
        return simplex.LpResult(simplex.UNBOUNDED, -np.inf, None, int(res.nit))
    if not res.success:
        raise simplex.SimplexError(res.message)
    return simplex.LpResult(simplex.OPTIMAL, float(res.fun), res.x, int(res.nit))


@dataclass
class _Shared:
    """State shared between workers; guard every mutation with ``lock``."""

    heap: list = field(default_factory=list)
    counter: itertools.count = field(default_factory=itertools.count)
    incumbent: Solution | None = None
    ub: float = math.inf
    lb: float = 0.0
    explored: int = 0
    iterations: int = 0
    in_flight: dict[int, float] = field(default_factory=dict)
    trace: list = field(default_factory=list)
    trace_sink = None
    repair_state: RepairState | None = None
    stop: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


def _is_integral(model: Model, values: np.ndarray) -> bool:
    ints = model.is_integer
    if not ints.any():
        return True
    v = values[ints]
    return bool(np.max(np.abs(v - np.round(v))) <= INT_TOL)


def _extract_incumbent(model: Model, instance: Instance,
                       spt: ShortestPathTable, values: np.ndarray) -> Solution | None:
    """Solution from an integral, separation-clean LP point. Arc components
    that carry no spray and cannot be reached from the depot are dropped."""
    vx = model.vindex
    routes = []
    for r in range(vx.n_robots):
        arcs = {a: 1 for a in vx.arcs if values[vx.x(r, a)] > 0.5}
        reach = reachable_from(set(arcs), instance.depot)
        arcs = {a: 1 for a in arcs if a[0] in reach}
        sprays = {e: float(values[vx.y(r, e)]) for e in vx.y_edges
                  if values[vx.y(r, e)] > 1e-7}
        try:
            walk = closed_walk_from_arcs(arcs, instance.depot)
        except ValueError:
            return None
        routes.append(Route(r, tuple(walk), sprays))
    singles = {e: int(round(values[vx.z(e)])) for e in vx.z_edges
               if values[vx.z(e)] > 0.5}
    solution = make_solution(instance, routes, model.formulation_tag, singles,
                             spt if singles else None)
    report = verify_solution(instance, solution, model.formulation_tag)
    if not report.feasible:
        log.warning("integral node failed verification: %s", report.violations)
        return None
    return solution


def solve(model: Model, instance: Instance, params: SolveParams | None = None,
          root_bounds: dict[int, tuple[float, float]] | None = None,
          trace_sink=None) -> SolveReport:
    """Branch-and-cut solve of a built model. ``root_bounds`` pins variable
    bounds at the root (inherited everywhere), keyed by column;
    ``trace_sink`` receives each bounds-trace row as it is produced."""
    params = params or SolveParams()
    t0 = time.monotonic()
    spt = dijkstra_all(instance)
    eager: list[Row] = []
    if not params.lazy_cuts:
        eager = enumerate_connectivity_rows(instance, model.vindex)
    ws = _Workspace(model, eager, params.lp_backend)
    # With an all-integer objective every integral solution has integer
    # cost, so fractional node bounds can be rounded up.
    ws.integral_objective = bool(
        np.all(np.abs(model.objective - np.round(model.objective)) < 1e-9))
    shared = _Shared()
    shared.repair_state = RepairState(params.gamma if params.repair else 0)
    shared.trace_sink = trace_sink
    rng = random.Random(params.seed) if params.seed is not None else None

    _push(shared, rng, bound=0.0, depth=0,
          bounds={} if root_bounds is None else dict(root_bounds))
    _emit(shared, t0, force=True)

    def out_of_time() -> bool:
        return time.monotonic() - t0 >= params.time_limit_s

    def worker() -> None:
        while True:
            with shared.lock:
                if shared.stop or _converged(shared, params):
                    shared.stop = True
                    return
                if not shared.heap:
                    if not shared.in_flight:
                        return
                    wait = True
                else:
                    bound, neg_depth, tie, seq, bounds = heapq.heappop(shared.heap)
                    depth = -neg_depth
                    shared.in_flight[seq] = bound
                    wait = False
            if wait:
                if out_of_time():
                    with shared.lock:
                        shared.stop = True
                    return
                time.sleep(0.001)
                continue
            if out_of_time():
                with shared.lock:
                    # Re-queue untouched so the bound stays accounted for.
                    heapq.heappush(shared.heap,
                                   (bound, neg_depth, tie, seq, bounds))
                    del shared.in_flight[seq]
                    shared.stop = True
                return
            _process_node(model, instance, spt, ws, shared, params, rng,
                          bound, seq, depth, bounds, t0)

    threads = []
    n_workers = max(1, params.workers)
    if n_workers == 1:
        worker()
    else:
        for _ in range(n_workers):
            th = threading.Thread(target=worker, daemon=True)
            threads.append(th)
            th.start()
        for th in threads:
            th.join()

    wall = time.monotonic() - t0
    with shared.lock:
        exhausted = not shared.heap and not shared.in_flight
        incumbent = shared.incumbent
        if exhausted:
            shared.lb = shared.ub if incumbent else math.inf
        ub = shared.ub if incumbent else None
        gap = gap_percent(ub, shared.lb)
        if incumbent and (exhausted or (gap is not None and gap <= 100 * params.gap_tol)):
            status = "optimal"
        elif incumbent:
            status = "feasible"
        elif exhausted:
            status = "infeasible"
        else:
            status = "limit"
        if not incumbent and exhausted:
            shared.lb = math.inf
        _emit(shared, t0, force=True)
        report = SolveReport(
            status=status,
            solution=incumbent,
            ub=ub,
            lb=float(shared.lb) if math.isfinite(shared.lb) else shared.lb,
            gap_percent=gap,
            explored_nodes=shared.explored,
            simplex_iterations=shared.iterations,
            accepted_heuristics=shared.repair_state.accepted_count,
            trace=tuple(shared.trace),
            wall_time_s=wall,
            formulation=model.formulation_tag,
            robots=model.n_robots,
            cuts=tuple(ws.cut_objs),
        )
    return report


def _converged(shared: _Shared, params: SolveParams) -> bool:
    if shared.incumbent is None:
        return False
    lb = _current_lb(shared)
    if lb is None:
        return True
    return (shared.ub - lb) <= params.gap_tol * max(abs(shared.ub), 1e-9)


def _current_lb(shared: _Shared):
    bounds = [entry[0] for entry in shared.heap]
    bounds.extend(shared.in_flight.values())
    return min(bounds) if bounds else None


def _push(shared: _Shared, rng, bound: float, depth: int, bounds: dict) -> None:
    # Best bound first, then deeper nodes, then FIFO; an explicit seed only
    # shuffles the order of exact ties.
    tie = rng.random() if rng is not None else 0.0
    heapq.heappush(shared.heap,
                   (bound, -depth, tie, next(shared.counter), bounds))


def _emit(shared: _Shared, t0: float, force: bool = False) -> None:
    """Record a trace row when the bounds moved (lock must be held)."""
    lb_now = _current_lb(shared)
    if lb_now is not None:
        shared.lb = max(shared.lb, min(lb_now, shared.ub))
    ub = shared.ub if shared.incumbent is not None else None
    row = (time.monotonic() - t0, shared.lb, ub, shared.explored,
           shared.repair_state.accepted_count if shared.repair_state else 0)
    if shared.trace and not force:
        last = shared.trace[-1]
        if last[1] == row[1] and last[2] == row[2]:
            return
    shared.trace.append(row)
    if shared.trace_sink is not None:
        shared.trace_sink(row)
    gap = gap_percent(ub, shared.lb)
    log.info("node=%d lb=%.6g ub=%s gap=%s%%", shared.explored, shared.lb,
             "inf" if ub is None else f"{ub:.6g}",
             "inf" if gap is None else f"{gap:.2f}")


def _process_node(model, instance, spt, ws, shared, params, rng,
                  bound, seq, depth, bounds, t0) -> None:
    with shared.lock:
        ub_snapshot = shared.ub
        n_cuts = len(ws.cut_rows)
        shared.explored += 1
        shared.in_flight[seq] = bound
    integral_rounds = 0
    fractional_rounds = 0
    pending_children = None
    incumbent_candidate = None
    repair_candidate = None
    repair_attempted = False
    iterations = 0
    while True:
        res = ws.solve(bounds, n_cuts)
        iterations += res.iterations
        if res.status == simplex.UNBOUNDED:
            raise RuntimeError("relaxation unbounded: model is malformed")
        if res.status == simplex.INFEASIBLE:
            break
        node_bound = res.value
        if ws.integral_objective:
            node_bound = float(math.ceil(res.value - INT_TOL))
        if node_bound >= ub_snapshot - PRUNE_TOL:
            break
        node = NodeSolution(model, res.x, res.value, depth, bounds)
        with shared.lock:
            shared.in_flight[seq] = node_bound
            ub_snapshot = shared.ub
        if _is_integral(model, res.x):
            cuts = separate_connectivity(node, instance, params.support_threshold)
            if cuts:
                with shared.lock:
                    added = [ws.add_cut(instance, c) for c in cuts]
                    n_cuts = len(ws.cut_rows)
                integral_rounds += 1
                if integral_rounds > 1000 or not any(added):
                    # Defensive: re-queue rather than accept a point whose
                    # violated cuts could not be applied.
                    pending_children = [(node_bound, depth, bounds)]
                    break
                continue
            incumbent_candidate = _extract_incumbent(model, instance, spt, res.x)
            break
        # Fractional point: optionally separate, then repair, then branch.
        gap_now = gap_percent(ub_snapshot if ub_snapshot < math.inf else None,
                              max(shared.lb, 0.0))
        deep_enough = depth <= params.cut_depth_max
        gap_big = gap_now is None or gap_now >= 100 * params.cut_gap_min
        if (params.lazy_cuts and deep_enough and gap_big
                and fractional_rounds < params.max_cut_rounds):
            cuts = separate_connectivity(node, instance, params.support_threshold)
            if cuts:
                with shared.lock:
                    added = [ws.add_cut(instance, c) for c in cuts]
                    n_cuts = len(ws.cut_rows)
                if any(added):
                    fractional_rounds += 1
                    continue
        if params.repair and shared.repair_state.enabled:
            repair_attempted = True
            y_maps = [node.y_map(r) for r in range(model.n_robots)]
            repair_candidate = greedy_routing(
                y_maps, node.z_map(), instance, spt,
                model.formulation_tag, params.repair_anchor)
        col, lo_child, hi_child = branch(node)
        floor_bounds = dict(bounds)
        floor_bounds[col] = lo_child
        ceil_bounds = dict(bounds)
        ceil_bounds[col] = hi_child
        pending_children = [(node_bound, depth + 1, floor_bounds),
                            (node_bound, depth + 1, ceil_bounds)]
        break

    with shared.lock:
        shared.iterations += iterations
        if incumbent_candidate is not None:
            if incumbent_candidate.objective < shared.ub - PRUNE_TOL:
                shared.ub = incumbent_candidate.objective
                shared.incumbent = incumbent_candidate
        if repair_attempted:
            cost = repair_candidate.objective if repair_candidate else None
            decision = offer(shared.repair_state, cost, shared.ub)
            if decision == "accept":
                shared.ub = repair_candidate.objective
                shared.incumbent = repair_candidate
        if pending_children:
            for child_bound, child_depth, child_bounds in pending_children:
                if child_bound < shared.ub - PRUNE_TOL:
                    _push(shared, rng, child_bound, child_depth, child_bounds)
        del shared.in_flight[seq]
        _emit(shared, t0)
