"""Command-line front end: solve, check, convert, benchmark and sweep.

Exit codes: 0 solved (optimal or feasible incumbent), 2 infeasible,
3 hit the limit without an incumbent, 4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .formulation import (add_symmetry, build_basic, build_large, gap_percent,
                          multi_robot_count, robot_count, write_lp)
from .graph import Instance, InstanceError, dijkstra_all
from .io import (ParseError, format_trace, parse_canonical, parse_val,
                 read_solution, solution_to_file, file_to_solution,
                 write_canonical, write_solution, write_val)
from .search import SolveParams, SolveReport, solve
from .structure import verify_solution

log = logging.getLogger("scarp")

PRESETS = {
    "basic-model": dict(cuts=False, symmetry=False, repair=False),
    "lazy-constraints": dict(cuts=True, symmetry=False, repair=False),
    "sym-elimination": dict(cuts=True, symmetry=True, repair=False),
    "heuristic-repair": dict(cuts=True, symmetry=True, repair=True),
    "heuristic-nosym": dict(cuts=True, symmetry=False, repair=True),
}

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_instance(path: str) -> Instance:
    text = Path(path).read_text()
    head = next((ln.strip() for ln in text.splitlines()
                 if ln.strip() and not ln.strip().startswith("#")), "")
    if head.upper().startswith("NOMBRE") or path.endswith(".val"):
        return parse_val(text)
    return parse_canonical(text)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--formulation", choices=("basic", "large"), default="basic")
    p.add_argument("--time-limit", type=float, default=7200.0, metavar="S")
    p.add_argument("--gamma", type=int, default=3000)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--no-cuts", action="store_true",
                   help="materialize every connectivity row up front")
    p.add_argument("--no-symmetry", action="store_true")
    p.add_argument("--no-repair", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--multi-robots", type=int, default=None,
                   help="override the large formulation's fleet size")
    p.add_argument("--repair-anchor", choices=("position", "depot"),
                   default="position")
    p.add_argument("--lp-backend", choices=("reference", "scipy"),
                   default="reference")
    p.add_argument("--config", default=None, metavar="FILE",
                   help="key = value file supplying defaults for any flag")


def _params_from(args, cuts: bool, repair: bool) -> SolveParams:
    return SolveParams(
        time_limit_s=args.time_limit,
        gap_tol=args.gap_tol,
        gamma=args.gamma,
        workers=args.workers,
        seed=args.seed,
        lazy_cuts=cuts,
        repair=repair,
        repair_anchor=args.repair_anchor,
        lp_backend=args.lp_backend,
    )


def _build_model(instance, formulation, symmetry, multi_robots=None):
    if formulation == "large":
        model = build_large(instance, dijkstra_all(instance), multi_robots)
    else:
        model = build_basic(instance)
    if symmetry:
        model = add_symmetry(model)
    return model


def _run(instance, args, cuts: bool, symmetry: bool, repair: bool,
         trace_sink=None) -> SolveReport:
    model = _build_model(instance, args.formulation, symmetry,
                         getattr(args, "multi_robots", None))
    return solve(model, instance, _params_from(args, cuts, repair),
                 trace_sink=trace_sink)


def _config_section(args, cuts, symmetry, repair) -> dict:
    return {
        "instance": args.instance,
        "formulation": args.formulation,
        "time_limit_s": args.time_limit,
        "gamma": args.gamma,
        "gap_tol": args.gap_tol,
        "lazy_cuts": cuts,
        "symmetry": symmetry,
        "repair": repair,
        "workers": args.workers,
        "seed": args.seed,
    }


def _write_outputs(instance, report: SolveReport, args, config: dict) -> None:
    if args.solution and report.solution is not None:
        doc = solution_to_file(instance, report.solution, report.lb,
                               report.gap_percent)
        Path(args.solution).write_text(write_solution(doc))
    if args.report:
        payload = {
            "config": config,
            "result": report.result_dict(),
            "timing": {"wall_time_s": report.wall_time_s},
        }
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n")
    if args.trace:
        Path(args.trace).write_text(format_trace(report.trace))
        if not args.no_plot:
            from .plotting import render_trace
            png = str(Path(args.trace).with_suffix(".png"))
            render_trace(report.trace, png, title=instance.name)


def _exit_code(report: SolveReport) -> int:
    if report.status in ("optimal", "feasible"):
        return EXIT_OK
    if report.status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    cuts = not args.no_cuts
    symmetry = not args.no_symmetry
    repair = not args.no_repair
    live = None
    sink = None
    if args.trace:
        # Stream trace rows while the search runs; rewritten whole at exit.
        from .io import TRACE_HEADER

        live = open(args.trace, "w")
        live.write(TRACE_HEADER + "\n")

        def sink(row):
            t, lb, ub, nodes, acc = row
            ub_s = "" if ub is None else f"{ub:g}"
            live.write(f"{t:.3f},{lb:g},{ub_s},{nodes},{acc}\n")
            live.flush()

    try:
        report = _run(instance, args, cuts, symmetry, repair, trace_sink=sink)
    finally:
        if live is not None:
            live.close()
    _write_outputs(instance, report, args,
                   _config_section(args, cuts, symmetry, repair))
    gap = "-" if report.gap_percent is None else f"{report.gap_percent:.2f}%"
    obj = "-" if report.ub is None else f"{report.ub:.6g}"
    print(f"{instance.name}: status={report.status} objective={obj} "
          f"lb={report.lb:.6g} gap={gap} nodes={report.explored_nodes} "
          f"accepted={report.accepted_heuristics} time={report.wall_time_s:.1f}s")
    return _exit_code(report)


BENCH_HEADER = ["instance", "preset", "formulation", "n_vertices", "n_edges",
                "capacity", "robots", "sum_demand", "status", "objective",
                "lower_bound", "gap_percent", "accepted", "explored_nodes",
                "simplex_iterations", "time_s"]


def cmd_bench(args) -> int:
    instances: list[str] = []
    presets = list(PRESETS)
    settings: dict[str, str] = {}
    for ln, raw in enumerate(Path(args.manifest).read_text().splitlines(), 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        key, _, value = s.partition("=")
        key, value = key.strip(), value.strip()
        if not value:
            print(f"error: manifest line {ln}: expected 'key = value'",
                  file=sys.stderr)
            return EXIT_USAGE
        if key == "instance":
            instances.append(value)
        elif key == "presets":
            presets = [p.strip() for p in value.split(",") if p.strip()]
        else:
            settings[key] = value
    unknown = [p for p in presets if p not in PRESETS]
    if unknown:
        print(f"error: unknown presets {unknown}", file=sys.stderr)
        return EXIT_USAGE
    for key in ("formulation", "time_limit", "gamma", "gap_tol"):
        if key in settings:
            cast = str if key == "formulation" else (int if key == "gamma" else float)
            setattr(args, key, cast(settings[key]))
    rows = []
    for path in instances:
        instance = load_instance(path)
        for preset in presets:
            toggles = PRESETS[preset]
            report = _run(instance, args, toggles["cuts"], toggles["symmetry"],
                          toggles["repair"])
            robots = (multi_robot_count(instance) if args.formulation == "large"
                      else robot_count(instance))
            rows.append([
                instance.name, preset, args.formulation, instance.n_vertices,
                instance.n_edges, instance.capacity, robots,
                round(instance.total_demand, 6), report.status,
                "" if report.ub is None else report.ub,
                report.lb, "" if report.gap_percent is None else round(report.gap_percent, 4),
                report.accepted_heuristics, report.explored_nodes,
                report.simplex_iterations, round(report.wall_time_s, 3),
            ])
    out = args.output or "bench.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_gamma_sweep(args) -> int:
    instance = load_instance(args.instance)
    gammas = [int(g) for g in args.gammas.split(",")]
    rows = []
    for gamma in gammas:
        args.gamma = gamma
        report = _run(instance, args, cuts=not args.no_cuts,
                      symmetry=not args.no_symmetry, repair=gamma > 0)
        rows.append((gamma,
                     report.lb,
                     "" if report.ub is None else report.ub,
                     "" if report.gap_percent is None else round(report.gap_percent, 4),
                     report.accepted_heuristics))
    out = args.output or "gamma_sweep.csv"
    with open(out, "w", newline="") as fh:
        fh.write("gamma,lb,ub,gap,acc\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    if not args.no_plot:
        from .plotting import render_gamma_sweep
        plot_rows = [(r[0], r[1], r[2] if r[2] != "" else None, r[3], r[4])
                     for r in rows]
        usable = [r for r in plot_rows if r[2] is not None]
        if usable:
            render_gamma_sweep(usable, str(Path(out).with_suffix(".png")),
                               title=instance.name)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    instance = load_instance(args.instance)
    doc = read_solution(Path(args.solution).read_text())
    try:
        solution = file_to_solution(instance, doc)
    except ParseError as exc:
        print(f"invalid solution file: {exc}")
        return EXIT_INFEASIBLE
    report = verify_solution(instance, solution, doc.formulation)
    recomputed = solution.objective
    if report.feasible:
        print(f"feasible: cost {recomputed:.6g}")
        if abs(recomputed - doc.objective) > 1e-6:
            print(f"note: file claims objective {doc.objective:.6g}")
        return EXIT_OK
    print("infeasible:")
    for v in report.violations:
        print(f"  - {v}")
    return EXIT_INFEASIBLE


def cmd_convert(args) -> int:
    instance = load_instance(args.input)
    if args.to == "val":
        text = write_val(instance)
    else:
        text = write_canonical(instance)
    Path(args.output).write_text(text)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_model(args) -> int:
    instance = load_instance(args.instance)
    model = _build_model(instance, args.formulation, not args.no_symmetry,
                         args.multi_robots)
    Path(args.output).write_text(write_lp(model))
    print(f"wrote {args.output}")
    return EXIT_OK


def _apply_config(argv: list[str]) -> list[str]:
    """Inline 'key = value' config-file entries as leading defaults."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    injected = []
    for raw in Path(path).read_text().splitlines():
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        key, _, value = s.partition("=")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            injected.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            injected.extend([flag, value])
    # Command-line flags win: argparse keeps the last occurrence.
    head, tail = argv[:1], argv[1:]
    return head + injected + tail


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _Parser(prog="scarp",
                     description="Splittable capacitated arc routing solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[], help="solve one instance")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--trace", default=None, metavar="CSV")
    p.add_argument("--solution", default=None, metavar="FILE")
    p.add_argument("--report", default=None, metavar="JSON")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a manifest of instances x presets")
    p.add_argument("manifest")
    _solver_flags(p)
    p.add_argument("-o", "--output", default=None, metavar="CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gamma-sweep", help="solve repeatedly over gamma values")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--gammas", default="1000,3000,5000", metavar="LIST")
    p.add_argument("-o", "--output", default=None, metavar="CSV")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_gamma_sweep)

    p = sub.add_parser("check", help="verify a solution file against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("convert", help="convert between instance formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--to", choices=("canonical", "val"), default="canonical")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("model", help="dump the LP/MILP in text form")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("-o", "--output", required=True, metavar="LP")
    p.set_defaults(func=cmd_model)

    if "--config" in argv:
        try:
            sub_at = 1 if argv and argv[0] in sub.choices else 0
            argv = argv[:sub_at + 1] + _apply_config(argv[sub_at:])[1:]
        except (OSError, IndexError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s")
    try:
        return args.func(args)
    except (ParseError, InstanceError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
