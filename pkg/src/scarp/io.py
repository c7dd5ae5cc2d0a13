"""Parsers and writers for instance files, solution files and bound traces.

Two instance formats are supported:

* the canonical format used by this project::

      NAME <token>
      VERTICES <n>
      CAPACITY <P>
      DEPOT <v>
      EDGES <m>
      <i> <j> <cost> <demand>     (m lines, 1-based vertex ids)

  Header keys appear in exactly that order; ``#`` starts a comment line.

* the classical *val* benchmark layout (keyword sections in Spanish:
  NOMBRE, VERTICES, ARISTAS_REQ, ..., LISTA_ARISTAS_REQ, DEPOSITO).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .graph import Instance, InstanceError, make_instance


class ParseError(ValueError):
    """Malformed input file; carries a line number when available."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# canonical instance format


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        out.append((ln, s))
    return out


def parse_canonical(text: str) -> Instance:
    """Parse the canonical instance format; raises ParseError with the
    offending line number, and InstanceError for structural violations."""
    lines = _content_lines(text)
    keys = ["NAME", "VERTICES", "CAPACITY", "DEPOT", "EDGES"]
    if len(lines) < len(keys):
        raise ParseError("incomplete header (expected NAME/VERTICES/CAPACITY/DEPOT/EDGES)")
    header: dict[str, str] = {}
    for pos, key in enumerate(keys):
        ln, s = lines[pos]
        parts = s.split(None, 1)
        if parts[0] != key:
            raise ParseError(f"expected {key}, found {parts[0]!r}", ln)
        if len(parts) != 2:
            raise ParseError(f"{key} needs a value", ln)
        header[key] = parts[1].strip()
    try:
        n = int(header["VERTICES"])
        capacity = float(header["CAPACITY"])
        depot = int(header["DEPOT"])
        m = int(header["EDGES"])
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from exc
    if m == 0:
        raise ParseError("EDGES count is zero")
    body = lines[len(keys):]
    if len(body) != m:
        raise ParseError(f"EDGES declares {m} edges but {len(body)} edge lines found")
    edges = []
    for ln, s in body:
        parts = s.split()
        if len(parts) != 4:
            raise ParseError("edge line needs '<i> <j> <cost> <demand>'", ln)
        try:
            i, j = int(parts[0]), int(parts[1])
            cost, demand = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ParseError(f"bad edge field: {exc}", ln) from exc
        edges.append((i, j, cost, demand))
    return make_instance(header["NAME"], n, edges, capacity, depot)


def write_canonical(instance: Instance) -> str:
    lines = [
        f"NAME {instance.name}",
        f"VERTICES {instance.n_vertices}",
        f"CAPACITY {_fmt(instance.capacity)}",
        f"DEPOT {instance.depot + 1}",
        f"EDGES {instance.n_edges}",
    ]
    for e in instance.edges:
        lines.append(f"{e.i + 1} {e.j + 1} {_fmt(e.cost)} {_fmt(e.demand)}")
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(x)


# ---------------------------------------------------------------------------
# val benchmark format

_VAL_KEYWORDS = {
    "NOMBRE", "COMENTARIO", "VERTICES", "ARISTAS_REQ", "ARISTAS_NOREQ",
    "VEHICULOS", "CAPACIDAD", "TIPO_COSTES_ARISTAS", "COSTE_TOTAL_ARISTAS_REQ",
    "LISTA_ARISTAS_REQ", "LISTA_ARISTAS_NOREQ", "DEPOSITO",
}

_VAL_EDGE_RE = re.compile(
    r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s+coste\s+(\S+)(?:\s+demanda\s+(\S+))?\s*$"
)


def parse_val(text: str) -> Instance:
    """Parse the published val benchmark layout into an Instance."""
    header: dict[str, str] = {}
    req: list[tuple[int, int, float, float]] = []
    noreq: list[tuple[int, int, float, float]] = []
    section: str | None = None
    for ln, s in _content_lines(text):
        m = _VAL_EDGE_RE.match(s)
        if m:
            if section is None:
                raise ParseError("edge line outside LISTA_ARISTAS section", ln)
            i, j = int(m.group(1)), int(m.group(2))
            cost = float(m.group(3))
            if section == "LISTA_ARISTAS_REQ":
                if m.group(4) is None:
                    raise ParseError("required edge without 'demanda' field", ln)
                req.append((i, j, cost, float(m.group(4))))
            else:
                noreq.append((i, j, cost, 0.0))
            continue
        key, _, value = s.partition(":")
        key = key.strip()
        if key not in _VAL_KEYWORDS:
            raise ParseError(f"unknown keyword {key!r}", ln)
        if key in ("LISTA_ARISTAS_REQ", "LISTA_ARISTAS_NOREQ"):
            section = key
        else:
            header[key] = value.strip()
    for needed in ("VERTICES", "CAPACIDAD"):
        if needed not in header:
            raise ParseError(f"missing section {needed}")
    if not req:
        raise ParseError("missing section LISTA_ARISTAS_REQ")
    if "ARISTAS_REQ" in header and int(header["ARISTAS_REQ"]) != len(req):
        raise ParseError(
            f"ARISTAS_REQ declares {header['ARISTAS_REQ']} edges, found {len(req)}")
    if "ARISTAS_NOREQ" in header and int(header["ARISTAS_NOREQ"]) != len(noreq):
        raise ParseError(
            f"ARISTAS_NOREQ declares {header['ARISTAS_NOREQ']} edges, found {len(noreq)}")
    depot = int(header.get("DEPOSITO", "1"))
    name = header.get("NOMBRE", "val")
    return make_instance(name, int(header["VERTICES"]), req + noreq,
                         float(header["CAPACIDAD"]), depot)


def write_val(instance: Instance, comment: str = "") -> str:
    """Write an instance in the val benchmark layout."""
    from .formulation import robot_count

    req = [e for e in instance.edges if e.demand > 0]
    noreq = [e for e in instance.edges if e.demand <= 0]
    lines = [
        f"NOMBRE : {instance.name}",
        f"COMENTARIO : {comment or instance.name}",
        f"VERTICES : {instance.n_vertices}",
        f"ARISTAS_REQ : {len(req)}",
        f"ARISTAS_NOREQ : {len(noreq)}",
        f"VEHICULOS : {robot_count(instance)}",
        f"CAPACIDAD : {_fmt(instance.capacity)}",
        "TIPO_COSTES_ARISTAS : EXPLICITOS",
        f"COSTE_TOTAL_ARISTAS_REQ : {_fmt(sum(e.cost for e in req))}",
        "LISTA_ARISTAS_REQ :",
    ]
    for e in req:
        lines.append(f"( {e.i + 1}, {e.j + 1}) coste {_fmt(e.cost)} demanda {_fmt(e.demand)}")
    if noreq:
        lines.append("LISTA_ARISTAS_NOREQ :")
        for e in noreq:
            lines.append(f"( {e.i + 1}, {e.j + 1}) coste {_fmt(e.cost)}")
    lines.append(f"DEPOSITO : {instance.depot + 1}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# solution files


@dataclass(frozen=True)
class SolutionFile:
    """On-disk form of an incumbent: 1-based routes and spray amounts."""

    instance_name: str
    formulation: str
    objective: float
    lower_bound: float
    gap_percent: float | None
    depot: int
    routes: tuple[tuple[int, ...], ...]
    sprays: tuple[tuple[tuple[int, int, float], ...], ...]
    singletons: tuple[tuple[int, int, int], ...] = ()


def write_solution(doc: SolutionFile) -> str:
    lines = [
        f"INSTANCE {doc.instance_name}",
        f"FORMULATION {doc.formulation}",
        f"OBJECTIVE {_fmt(doc.objective)}",
        f"LOWER_BOUND {_fmt(doc.lower_bound)}",
        f"GAP_PERCENT {'none' if doc.gap_percent is None else _fmt(doc.gap_percent)}",
        f"DEPOT {doc.depot}",
        f"ROBOTS {len(doc.routes)}",
    ]
    for r, (route, sprays) in enumerate(zip(doc.routes, doc.sprays), start=1):
        lines.append(f"ROBOT {r}")
        lines.append("ROUTE " + " ".join(str(v) for v in route))
        for i, j, amount in sprays:
            lines.append(f"SPRAY {i} {j} {_fmt(amount)}")
    for i, j, count in doc.singletons:
        lines.append(f"SINGLETON {i} {j} {count}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def read_solution(text: str) -> SolutionFile:
    """Parse and structurally validate a solution document.

    Instance-level feasibility is the verifier's job; here we only reject
    documents that cannot describe any solution (self-loop spray edges,
    routes that do not close at the depot, truncated files).
    """
    lines = _content_lines(text)
    if not lines or lines[-1][1] != "END":
        raise ParseError("missing END marker")
    fields: dict[str, str] = {}
    pos = 0
    for key in ("INSTANCE", "FORMULATION", "OBJECTIVE", "LOWER_BOUND",
                "GAP_PERCENT", "DEPOT", "ROBOTS"):
        if pos >= len(lines):
            raise ParseError(f"missing {key} field")
        ln, s = lines[pos]
        parts = s.split(None, 1)
        if parts[0] != key:
            raise ParseError(f"expected {key}, found {parts[0]!r}", ln)
        fields[key] = parts[1].strip() if len(parts) > 1 else ""
        pos += 1
    try:
        objective = float(fields["OBJECTIVE"])
        lower_bound = float(fields["LOWER_BOUND"])
        gap = None if fields["GAP_PERCENT"] == "none" else float(fields["GAP_PERCENT"])
        depot = int(fields["DEPOT"])
        n_robots = int(fields["ROBOTS"])
    except ValueError as exc:
        raise ParseError(f"bad field value: {exc}") from exc
    if fields["FORMULATION"] not in ("basic", "large"):
        raise ParseError(f"unknown formulation {fields['FORMULATION']!r}")

    routes: list[tuple[int, ...]] = []
    sprays: list[tuple[tuple[int, int, float], ...]] = []
    singles: list[tuple[int, int, int]] = []
    current: list[tuple[int, int, float]] | None = None
    for ln, s in lines[pos:-1]:
        parts = s.split()
        if parts[0] == "ROBOT":
            if current is not None:
                sprays.append(tuple(current))
            current = []
        elif parts[0] == "ROUTE":
            if current is None or len(routes) != len(sprays):
                raise ParseError("ROUTE outside a ROBOT block", ln)
            try:
                route = tuple(int(v) for v in parts[1:])
            except ValueError as exc:
                raise ParseError(f"bad route vertex: {exc}", ln) from exc
            if not route:
                raise ParseError("empty ROUTE", ln)
            if route[0] != depot or route[-1] != depot:
                raise ParseError("route must start and end at the depot", ln)
            if any(v < 1 for v in route):
                raise ParseError("route vertex ids are 1-based positives", ln)
            routes.append(route)
        elif parts[0] == "SPRAY":
            if current is None:
                raise ParseError("SPRAY outside a ROBOT block", ln)
            if len(parts) != 4:
                raise ParseError("SPRAY needs '<i> <j> <amount>'", ln)
            i, j, amount = int(parts[1]), int(parts[2]), float(parts[3])
            if i == j or i < 1 or j < 1:
                raise ParseError(f"spray references nonexistent edge ({i},{j})", ln)
            if amount < 0:
                raise ParseError("negative spray amount", ln)
            current.append((i, j, amount))
        elif parts[0] == "SINGLETON":
            if len(parts) != 4:
                raise ParseError("SINGLETON needs '<i> <j> <count>'", ln)
            i, j, count = int(parts[1]), int(parts[2]), int(parts[3])
            if i == j or i < 1 or j < 1:
                raise ParseError(f"singleton references nonexistent edge ({i},{j})", ln)
            singles.append((i, j, count))
        else:
            raise ParseError(f"unknown record {parts[0]!r}", ln)
    if current is not None:
        sprays.append(tuple(current))
    if len(routes) != n_robots or len(sprays) != n_robots:
        raise ParseError(f"ROBOTS declares {n_robots} routes, found {len(routes)}")
    return SolutionFile(
        instance_name=fields["INSTANCE"],
        formulation=fields["FORMULATION"],
        objective=objective,
        lower_bound=lower_bound,
        gap_percent=gap,
        depot=depot,
        routes=tuple(routes),
        sprays=tuple(sprays),
        singletons=tuple(singles),
    )


def solution_to_file(instance: Instance, solution, lower_bound: float,
                     gap_percent: float | None) -> SolutionFile:
    """Convert an in-memory Solution to its on-disk document."""
    routes = []
    sprays = []
    for route in solution.routes:
        routes.append(tuple(v + 1 for v in route.vertices))
        entries = []
        for k in sorted(route.sprays):
            amt = route.sprays[k]
            if amt > 1e-12:
                e = instance.edges[k]
                entries.append((e.i + 1, e.j + 1, float(amt)))
        sprays.append(tuple(entries))
    singles = []
    for k in sorted(solution.singletons):
        count = solution.singletons[k]
        if count:
            e = instance.edges[k]
            singles.append((e.i + 1, e.j + 1, int(count)))
    return SolutionFile(
        instance_name=instance.name,
        formulation=solution.formulation,
        objective=float(solution.objective),
        lower_bound=float(lower_bound),
        gap_percent=gap_percent,
        depot=instance.depot + 1,
        routes=tuple(routes),
        sprays=tuple(sprays),
        singletons=tuple(singles),
    )


def file_to_solution(instance: Instance, doc: SolutionFile):
    """Convert an on-disk document back to a Solution (edge ids resolved)."""
    from .graph import dijkstra_all
    from .solution import Route, make_solution

    idx = instance.edge_index()

    def edge_id(i: int, j: int, ln_desc: str) -> int:
        key = (min(i, j) - 1, max(i, j) - 1)
        if key not in idx:
            raise ParseError(f"{ln_desc} references nonexistent edge ({i},{j})")
        return idx[key]

    routes = []
    for r, (route, entries) in enumerate(zip(doc.routes, doc.sprays)):
        for a, b in zip(route, route[1:]):
            edge_id(a, b, "route")
        spray_map = {}
        for i, j, amount in entries:
            spray_map[edge_id(i, j, "spray")] = amount
        routes.append(Route(r, tuple(v - 1 for v in route), spray_map))
    singles = {edge_id(i, j, "singleton"): count for i, j, count in doc.singletons}
    spt = dijkstra_all(instance) if singles else None
    return make_solution(instance, routes, doc.formulation, singles, spt)


# ---------------------------------------------------------------------------
# bounds trace

TRACE_HEADER = "time_s,lb,ub,nodes,accepted_heuristics"


def format_trace(rows) -> str:
    """CSV text for a bounds trace: (time_s, lb, ub, nodes, accepted)."""
    out = [TRACE_HEADER]
    for t, lb, ub, nodes, acc in rows:
        ub_s = "" if ub is None else _fmt(float(ub))
        lb_s = "" if lb is None else _fmt(float(lb))
        out.append(f"{t:.3f},{lb_s},{ub_s},{nodes},{acc}")
    return "\n".join(out) + "\n"
