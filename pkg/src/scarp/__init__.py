"""Exact solver toolkit for the splittable capacitated arc routing problem."""

from .formulation import (Model, add_symmetry, build_basic, build_large,
                          gap_percent, multi_robot_count, robot_count)
from .graph import (Instance, InstanceError, ShortestPathTable, dijkstra_all,
                    make_instance, reachable_from, required_edges)
from .io import (ParseError, SolutionFile, parse_canonical, parse_val,
                 read_solution, write_canonical, write_solution, write_val)
from .repair import RepairState, connectable_path, greedy_routing, offer, remove_duplicate
from .search import Cut, NodeSolution, SolveParams, SolveReport, branch, \
    separate_connectivity, solve
from .solution import Route, Solution, make_solution
from .structure import (SupportClasses, brute_force_solve, cancel_cycles,
                        counterexample_instance, support_classes, verify_solution)

__version__ = "0.1.0"

__all__ = [
    "Cut", "Instance", "InstanceError", "Model", "NodeSolution", "ParseError",
    "RepairState", "Route", "ShortestPathTable", "Solution", "SolutionFile",
    "SolveParams", "SolveReport", "SupportClasses", "add_symmetry", "branch",
    "brute_force_solve", "build_basic", "build_large", "cancel_cycles",
    "connectable_path", "counterexample_instance", "dijkstra_all",
    "gap_percent", "greedy_routing", "make_instance", "make_solution",
    "multi_robot_count", "offer", "parse_canonical", "parse_val",
    "read_solution", "reachable_from", "remove_duplicate", "required_edges",
    "robot_count", "separate_connectivity", "solve", "support_classes",
    "verify_solution", "write_canonical", "write_solution", "write_val",
]
