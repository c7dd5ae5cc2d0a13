"""Solver-independent MILP models for the two spray-routing formulations.

Variables:
  x[r, (u, v)]  binary, robot r traverses directed arc (u, v)
  y[r, e]       continuous >= 0, amount robot r sprays on edge e (created
                only for edges with positive demand)
  z[e]          integer >= 0, number of full-capacity out-and-back trips
                dedicated to edge e (large formulation only)

Rows materialized at build time: per-robot capacity, per-edge demand
coverage, spray/traversal linking and per-vertex flow conservation.
Connectivity rows are left to lazy separation (or to
``enumerate_connectivity_rows`` when run without lazy cuts).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import EPS, Instance, ShortestPathTable, required_edges

log = logging.getLogger(__name__)

INF = float("inf")


def robot_count(instance: Instance) -> int:
    """Number of robot tours: smallest integer covering total demand.

    Exact multiples of the capacity (within tolerance) are not rounded up.
    """
    total = instance.total_demand
    if total <= EPS:
        raise ValueError("nothing to spray: total demand is zero")
    return int(math.ceil(total / instance.capacity - EPS))


def multi_robot_count(instance: Instance) -> int:
    """Size of the reduced robot set for the large-demands formulation:
    min(|edges| - 1, robot_count)."""
    m = instance.n_edges
    if m <= 1:
        log.warning("instance %s has a single edge: no multi-edge robots", instance.name)
        return 0
    return min(m - 1, robot_count(instance))


def gap_percent(ub: float | None, lb: float | None) -> float | None:
    """Relative optimality gap in percent, measured against the incumbent:
    100 * (UB - LB) / UB. Returns None when no meaningful gap exists."""
    if ub is None or lb is None or not math.isfinite(ub):
        return None
    if ub <= 0:
        return 0.0 if abs(ub - lb) <= 1e-12 else None
    return 100.0 * (ub - lb) / ub


@dataclass(frozen=True)
class VariableIndex:
    """Bijection between (kind, key) variable names and dense columns."""

    arcs: tuple[tuple[int, int], ...]
    y_edges: tuple[int, ...]            # edge indices carrying Y columns
    z_edges: tuple[int, ...]            # edge indices carrying Z columns
    n_robots: int

    def n_cols(self) -> int:
        return self.n_robots * (len(self.arcs) + len(self.y_edges)) + len(self.z_edges)

    def x(self, robot: int, arc: tuple[int, int]) -> int:
        return robot * len(self.arcs) + self._arc_pos[arc]

    def y(self, robot: int, edge: int) -> int:
        base = self.n_robots * len(self.arcs)
        return base + robot * len(self.y_edges) + self._y_pos[edge]

    def z(self, edge: int) -> int:
        base = self.n_robots * (len(self.arcs) + len(self.y_edges))
        return base + self._z_pos[edge]

    def describe(self, col: int) -> str:
        kind, robot, key = self.column(col)
        if kind == "x":
            return f"x_r{robot + 1}_{key[0] + 1}_{key[1] + 1}"
        if kind == "y":
            return f"y_r{robot + 1}_e{key + 1}"
        return f"z_e{key + 1}"

    def column(self, col: int) -> tuple[str, int, object]:
        """Inverse map: column -> (kind, robot, key); robot is -1 for z."""
        na, ny = len(self.arcs), len(self.y_edges)
        if col < self.n_robots * na:
            return ("x", col // na, self.arcs[col % na])
        col -= self.n_robots * na
        if col < self.n_robots * ny:
            return ("y", col // ny, self.y_edges[col % ny])
        col -= self.n_robots * ny
        return ("z", -1, self.z_edges[col])

    def __post_init__(self):
        object.__setattr__(self, "_arc_pos", {a: k for k, a in enumerate(self.arcs)})
        object.__setattr__(self, "_y_pos", {e: k for k, e in enumerate(self.y_edges)})
        object.__setattr__(self, "_z_pos", {e: k for k, e in enumerate(self.z_edges)})


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[int, float], ...]
    sense: str                  # one of "<=", "=", ">="
    rhs: float
    name: str


@dataclass(frozen=True)
class Model:
    """Indexed linear program: objective, rows, bounds and integrality."""

    instance: Instance
    vindex: VariableIndex
    objective: np.ndarray
    rows: tuple[Row, ...]
    lower: np.ndarray
    upper: np.ndarray
    is_integer: np.ndarray
    formulation_tag: str
    has_symmetry: bool = False

    @property
    def n_robots(self) -> int:
        return self.vindex.n_robots


def _base_rows(instance: Instance, vx: VariableIndex, coverage_sense: str,
               z_credit: bool) -> list[Row]:
    P = instance.capacity
    rows: list[Row] = []
    req = [k for k, e in enumerate(instance.edges) if e.demand > EPS]
    for r in range(vx.n_robots):
        coeffs = tuple((vx.y(r, k), 1.0) for k in req)
        rows.append(Row(coeffs, "<=", P, f"capacity[r{r + 1}]"))
    for k in req:
        e = instance.edges[k]
        coeffs = [(vx.y(r, k), 1.0) for r in range(vx.n_robots)]
        if z_credit and k in vx._z_pos:
            coeffs.append((vx.z(k), P))
        rows.append(Row(tuple(coeffs), coverage_sense, e.demand,
                        f"demand[{e.i + 1},{e.j + 1}]"))
    for k in req:
        e = instance.edges[k]
        for r in range(vx.n_robots):
            coeffs = (
                (vx.y(r, k), 1.0),
                (vx.x(r, (e.i, e.j)), -P),
                (vx.x(r, (e.j, e.i)), -P),
            )
            rows.append(Row(coeffs, "<=", 0.0, f"link[{e.i + 1},{e.j + 1},r{r + 1}]"))
    adj = instance.adjacency()
    for r in range(vx.n_robots):
        for v in range(instance.n_vertices):
            coeffs = []
            for w, _ in adj[v]:
                coeffs.append((vx.x(r, (w, v)), 1.0))
                coeffs.append((vx.x(r, (v, w)), -1.0))
            if coeffs:
                rows.append(Row(tuple(coeffs), "=", 0.0, f"flow[{v + 1},r{r + 1}]"))
    return rows


def _arc_costs(instance: Instance, vx: VariableIndex, c: np.ndarray) -> None:
    for r in range(vx.n_robots):
        for e in instance.edges:
            c[vx.x(r, (e.i, e.j))] = e.cost
            c[vx.x(r, (e.j, e.i))] = e.cost


def build_basic(instance: Instance) -> Model:
    """Full-robot-set model: every unit of demand is sprayed by an
    explicitly routed robot."""
    n_rob = robot_count(instance)
    req = tuple(k for k, e in enumerate(instance.edges) if e.demand > EPS)
    vx = VariableIndex(tuple(instance.arcs()), req, (), n_rob)
    n = vx.n_cols()
    c = np.zeros(n)
    _arc_costs(instance, vx, c)
    lower = np.zeros(n)
    upper = np.full(n, INF)
    is_int = np.zeros(n, dtype=bool)
    for r in range(n_rob):
        for a in vx.arcs:
            col = vx.x(r, a)
            upper[col] = 1.0
            is_int[col] = True
    rows = _base_rows(instance, vx, "=", z_credit=False)
    return Model(instance, vx, c, tuple(rows), lower, upper, is_int, "basic")


def build_large(instance: Instance, shortest_paths: ShortestPathTable,
                n_robots: int | None = None) -> Model:
    """Reduced-robot-set model: demand beyond what the routed robots spray
    is covered by integer counts of full-capacity out-and-back trips.

    ``n_robots`` overrides the default multi-robot fleet size.
    """
    n_rob = multi_robot_count(instance) if n_robots is None else n_robots
    P = instance.capacity
    d = instance.depot
    req = tuple(k for k, e in enumerate(instance.edges) if e.demand > EPS)
    vx = VariableIndex(tuple(instance.arcs()), req, req, n_rob)
    n = vx.n_cols()
    c = np.zeros(n)
    _arc_costs(instance, vx, c)
    lower = np.zeros(n)
    upper = np.full(n, INF)
    is_int = np.zeros(n, dtype=bool)
    for r in range(n_rob):
        for a in vx.arcs:
            col = vx.x(r, a)
            upper[col] = 1.0
            is_int[col] = True
    for k in req:
        e = instance.edges[k]
        col = vx.z(k)
        c[col] = shortest_paths.dist[d][e.i] + e.cost + shortest_paths.dist[e.j][d]
        upper[col] = float(math.floor(e.demand / P + EPS))
        is_int[col] = True
    rows = _base_rows(instance, vx, ">=", z_credit=True)
    return Model(instance, vx, c, tuple(rows), lower, upper, is_int, "large")


def add_symmetry(model: Model) -> Model:
    """Append robot-ordering and route-orientation rows.

    Ordering: robot r's travel cost is at least robot r-1's. Orientation:
    the return arc into the depot may not come from a lower-numbered
    neighbor than every departure arc used so far.
    """
    inst = model.instance
    vx = model.vindex
    rows = list(model.rows)
    arc_cost = {}
    for e in inst.edges:
        arc_cost[(e.i, e.j)] = e.cost
        arc_cost[(e.j, e.i)] = e.cost
    for r in range(1, vx.n_robots):
        coeffs = []
        for a in vx.arcs:
            coeffs.append((vx.x(r, a), arc_cost[a]))
            coeffs.append((vx.x(r - 1, a), -arc_cost[a]))
        rows.append(Row(tuple(coeffs), ">=", 0.0, f"order[r{r + 1}]"))
    depot = inst.depot
    neighbors = sorted(w for w, _ in inst.adjacency()[depot])
    for r in range(vx.n_robots):
        for k in neighbors:
            coeffs = [(vx.x(r, (depot, i)), 1.0) for i in neighbors if i <= k]
            coeffs.append((vx.x(r, (k, depot)), -1.0))
            rows.append(Row(tuple(coeffs), ">=", 0.0, f"orient[{k + 1},r{r + 1}]"))
    return Model(inst, vx, model.objective, tuple(rows), model.lower, model.upper,
                 model.is_integer, model.formulation_tag, has_symmetry=True)


def connectivity_row(instance: Instance, vx: VariableIndex, robot: int,
                     inside: frozenset[int]) -> Row:
    """Cut row for one robot and one depot-free vertex set ``inside``:
    capacity times the arcs crossing into the set must cover its sprays."""
    P = instance.capacity
    coeffs = []
    for a in vx.arcs:
        if a[0] not in inside and a[1] in inside:
            coeffs.append((vx.x(robot, a), P))
    for k, e in enumerate(instance.edges):
        if e.demand > EPS and e.i in inside and e.j in inside:
            coeffs.append((vx.y(robot, k), -1.0))
    label = ".".join(str(v + 1) for v in sorted(inside))
    return Row(tuple(coeffs), ">=", 0.0, f"conn[r{robot + 1},{{{label}}}]")


MAX_ENUMERATED_CONNECTIVITY_ROWS = 3000


def enumerate_connectivity_rows(instance: Instance, vx: VariableIndex) -> list[Row]:
    """Materialize the full connectivity family (every depot-free vertex
    subset, every robot). Exponential: refuses beyond a row budget, which
    mirrors how the eager model stops scaling past small instances."""
    n = instance.n_vertices
    others = [v for v in range(n) if v != instance.depot]
    n_subsets = (1 << len(others)) - 1
    total = n_subsets * vx.n_robots
    if total > MAX_ENUMERATED_CONNECTIVITY_ROWS:
        raise ValueError(
            f"eager connectivity needs {total} rows for {n} vertices; "
            "use lazy cuts instead")
    rows = []
    for mask in range(1, n_subsets + 1):
        inside = frozenset(v for b, v in enumerate(others) if mask >> b & 1)
        for r in range(vx.n_robots):
            rows.append(connectivity_row(instance, vx, r, inside))
    return rows


# ---------------------------------------------------------------------------
# model dump (CPLEX LP text format) for cross-checking with external solvers


def write_lp(model: Model) -> str:
    vx = model.vindex
    terms = []
    for col, coef in enumerate(model.objective):
        if coef:
            terms.append(f"+ {_num(coef)} {vx.describe(col)}")
    out = ["Minimize", " obj: " + (" ".join(terms) if terms else "0"), "Subject To"]
    sense_map = {"<=": "<=", ">=": ">=", "=": "="}
    for row in model.rows:
        expr = " ".join(
            f"{'-' if coef < 0 else '+'} {_num(abs(coef))} {vx.describe(col)}"
            for col, coef in row.coeffs)
        out.append(f" {row.name}: {expr} {sense_map[row.sense]} {_num(row.rhs)}")
    out.append("Bounds")
    for col in range(vx.n_cols()):
        lo, hi = model.lower[col], model.upper[col]
        name = vx.describe(col)
        if hi == INF:
            out.append(f" {_num(lo)} <= {name}")
        else:
            out.append(f" {_num(lo)} <= {name} <= {_num(hi)}")
    ints = [vx.describe(c) for c in range(vx.n_cols()) if model.is_integer[c]]
    if ints:
        out.append("Generals")
        out.append(" " + " ".join(ints))
    out.append("End")
    return "\n".join(out) + "\n"


def _num(x: float) -> str:
    return str(int(x)) if float(x) == int(x) else repr(float(x))
