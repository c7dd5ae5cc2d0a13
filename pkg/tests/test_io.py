from pathlib import Path

import pytest

from scarp.io import (ParseError, SolutionFile, file_to_solution, format_trace,
                      parse_canonical, parse_val, read_solution,
                      solution_to_file, write_canonical, write_solution,
                      write_val)

FIG3 = """\
# counter-example graph
NAME counterexample
VERTICES 4
CAPACITY 8
DEPOT 1
EDGES 5
1 2 1 1
2 3 1 12
3 4 1 1
1 3 1 1
1 4 1 1
"""


def test_parse_canonical_counterexample():
    inst = parse_canonical(FIG3)
    assert inst.name == "counterexample"
    assert inst.n_vertices == 4
    assert inst.total_demand == 16.0
    assert inst.capacity == 8.0
    assert inst.depot == 0


def test_parse_canonical_zero_edges():
    text = "NAME x\nVERTICES 2\nCAPACITY 5\nDEPOT 1\nEDGES 0\n"
    with pytest.raises(ParseError, match="EDGES count is zero"):
        parse_canonical(text)


def test_parse_canonical_normalizes_orientation():
    text = ("NAME x\nVERTICES 5\nCAPACITY 5\nDEPOT 1\nEDGES 4\n"
            "5 3 1.0 2.0\n1 3 1 1\n2 3 1 0\n4 5 1 0\n")
    inst = parse_canonical(text)
    assert (2, 4) in inst.edge_index()      # stored as (3,5), 0-based (2,4)


def test_parse_canonical_reports_line_numbers():
    bad = FIG3.replace("3 4 1 1", "3 4 one 1")
    with pytest.raises(ParseError, match="line 9"):
        parse_canonical(bad)
    swapped = "NAME x\nCAPACITY 5\nVERTICES 2\nDEPOT 1\nEDGES 1\n1 2 1 1\n"
    with pytest.raises(ParseError, match="expected VERTICES"):
        parse_canonical(swapped)
    with pytest.raises(ParseError, match="incomplete header"):
        parse_canonical("NAME x\nCAPACITY 5\n")


def test_parse_canonical_rejects_disconnection():
    text = "NAME x\nVERTICES 4\nCAPACITY 5\nDEPOT 1\nEDGES 2\n1 2 1 1\n3 4 1 1\n"
    with pytest.raises(Exception, match="disconnected"):
        parse_canonical(text)


def test_canonical_roundtrip_is_idempotent(counterexample):
    text = write_canonical(counterexample)
    again = parse_canonical(text)
    assert again == counterexample
    assert write_canonical(again) == text


def test_val_roundtrip(counterexample):
    text = write_val(counterexample)
    inst = parse_val(text)
    assert inst.n_vertices == counterexample.n_vertices
    assert inst.edges == counterexample.edges
    assert inst.capacity == counterexample.capacity


def test_parse_val_shipped_file():
    path = Path(__file__).resolve().parents[1] / "instances" / "val" / "val1a.val"
    inst = parse_val(path.read_text())
    assert inst.n_vertices == 24
    assert inst.n_edges == 39
    assert inst.capacity == 200.0
    assert inst.total_demand == 358.0
    from scarp.formulation import multi_robot_count, robot_count
    assert robot_count(inst) == 2
    assert multi_robot_count(inst) == 2      # min(39 - 1, 2)


def test_parse_val_errors():
    with pytest.raises(ParseError, match="unknown keyword"):
        parse_val("NOMBRE : x\nWHAT : 3\n")
    truncated = "NOMBRE : x\nVERTICES : 3\nCAPACIDAD : 5\n"
    with pytest.raises(ParseError, match="missing section LISTA_ARISTAS_REQ"):
        parse_val(truncated)
    mismatch = ("NOMBRE : x\nVERTICES : 3\nARISTAS_REQ : 2\nCAPACIDAD : 5\n"
                "LISTA_ARISTAS_REQ :\n( 1, 2) coste 1 demanda 1\nDEPOSITO : 1\n")
    with pytest.raises(ParseError, match="ARISTAS_REQ declares"):
        parse_val(mismatch)


def _table1_doc(counterexample, table1):
    return solution_to_file(counterexample, table1, lower_bound=7.0,
                            gap_percent=0.0)


def test_solution_roundtrip_table1(counterexample, table1):
    doc = _table1_doc(counterexample, table1)
    text = write_solution(doc)
    again = read_solution(text)
    assert again == doc
    assert write_solution(again) == text
    back = file_to_solution(counterexample, again)
    assert back.objective == 7.0


def test_solution_roundtrip_empty():
    doc = SolutionFile("x", "basic", 0.0, 0.0, None, 1, (), ())
    assert read_solution(write_solution(doc)) == doc


def test_solution_rejects_phantom_edge(counterexample, table1):
    doc = _table1_doc(counterexample, table1)
    text = write_solution(doc).replace("SPRAY 2 3 7", "SPRAY 9 9 7")
    with pytest.raises(ParseError, match=r"nonexistent edge \(9,9\)"):
        read_solution(text)


def test_solution_rejects_route_not_at_depot(counterexample, table1):
    doc = _table1_doc(counterexample, table1)
    text = write_solution(doc).replace("ROUTE 1 2 3 1", "ROUTE 2 3 1")
    with pytest.raises(ParseError, match="start and end at the depot"):
        read_solution(text)


def test_file_to_solution_checks_edges(counterexample, table1):
    doc = _table1_doc(counterexample, table1)
    text = write_solution(doc).replace("SPRAY 2 3 7", "SPRAY 2 4 7")
    with pytest.raises(ParseError, match=r"\(2,4\)"):
        file_to_solution(counterexample, read_solution(text))
    off_graph = write_solution(doc).replace("ROUTE 1 2 3 1", "ROUTE 1 2 4 1")
    with pytest.raises(ParseError, match=r"route references nonexistent"):
        file_to_solution(counterexample, read_solution(off_graph))


def test_trace_format():
    rows = [(0.0, 0.0, None, 0, 0), (1.25, 3.0, 7.5, 4, 1)]
    text = format_trace(rows)
    lines = text.splitlines()
    assert lines[0] == "time_s,lb,ub,nodes,accepted_heuristics"
    assert lines[1] == "0.000,0,,0,0"
    assert lines[2] == "1.250,3,7.5,4,1"
