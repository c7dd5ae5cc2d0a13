import json
from pathlib import Path

import pytest

from conftest import table1_solution
from scarp.cli import main
from scarp.io import (read_solution, solution_to_file, write_canonical,
                      write_solution)
from scarp.structure import counterexample_instance

ROOT = Path(__file__).resolve().parents[1]
COUNTEREXAMPLE = ROOT / "instances" / "counterexample.scarp"


@pytest.fixture()
def instance_file(tmp_path):
    path = tmp_path / "counterexample.scarp"
    path.write_text(write_canonical(counterexample_instance()))
    return path


def test_shipped_counterexample_matches_library():
    from scarp.io import parse_canonical

    inst = parse_canonical(COUNTEREXAMPLE.read_text())
    assert inst == counterexample_instance()


def test_solve_writes_outputs(tmp_path, instance_file):
    sol = tmp_path / "out.sol"
    rep = tmp_path / "out.json"
    trace = tmp_path / "out.csv"
    code = main(["solve", str(instance_file), "--time-limit", "60",
                 "--solution", str(sol), "--report", str(rep),
                 "--trace", str(trace)])
    assert code == 0
    doc = read_solution(sol.read_text())
    assert doc.objective == pytest.approx(7.0)
    payload = json.loads(rep.read_text())
    assert payload["result"]["status"] == "optimal"
    assert payload["result"]["objective"] == pytest.approx(7.0)
    lines = trace.read_text().splitlines()
    assert lines[0] == "time_s,lb,ub,nodes,accepted_heuristics"
    assert (tmp_path / "out.png").exists()      # figure alongside the CSV


def test_solve_no_plot(tmp_path, instance_file):
    trace = tmp_path / "t.csv"
    assert main(["solve", str(instance_file), "--trace", str(trace),
                 "--no-plot"]) == 0
    assert not (tmp_path / "t.png").exists()


def test_solve_zero_time_limit_exits_3(instance_file):
    assert main(["solve", str(instance_file), "--time-limit", "0"]) == 3


def test_solve_large_formulation(instance_file):
    assert main(["solve", str(instance_file), "--formulation", "large"]) == 0


def test_check_accepts_table1(tmp_path, instance_file, capsys):
    inst = counterexample_instance()
    doc = solution_to_file(inst, table1_solution(inst), 7.0, 0.0)
    sol = tmp_path / "t1.sol"
    sol.write_text(write_solution(doc))
    assert main(["check", str(instance_file), str(sol)]) == 0
    assert "feasible: cost 7" in capsys.readouterr().out


def test_check_rejects_corrupted(tmp_path, instance_file, capsys):
    inst = counterexample_instance()
    doc = solution_to_file(inst, table1_solution(inst), 7.0, 0.0)
    text = write_solution(doc).replace("SPRAY 2 3 7", "SPRAY 2 3 8")
    sol = tmp_path / "bad.sol"
    sol.write_text(text)
    assert main(["check", str(instance_file), str(sol)]) == 2
    out = capsys.readouterr().out
    assert "infeasible" in out and "capacity" in out


def test_convert_roundtrip(tmp_path, instance_file):
    as_val = tmp_path / "ce.val"
    back = tmp_path / "ce.scarp"
    assert main(["convert", str(instance_file), str(as_val), "--to", "val"]) == 0
    assert main(["convert", str(as_val), str(back), "--to", "canonical"]) == 0
    from scarp.io import parse_canonical
    assert parse_canonical(back.read_text()) == counterexample_instance()


def test_bench_counterexample_presets(tmp_path, instance_file):
    manifest = tmp_path / "manifest.txt"
    manifest.write_text(
        "time_limit = 60\n"
        "presets = basic-model, lazy-constraints, sym-elimination, "
        "heuristic-repair, heuristic-nosym\n"
        f"instance = {instance_file}\n")
    out = tmp_path / "bench.csv"
    assert main(["bench", str(manifest), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 6
    header = lines[0].split(",")
    obj_at = header.index("objective")
    preset_at = header.index("preset")
    rows = [ln.split(",") for ln in lines[1:]]
    assert {r[preset_at] for r in rows} == {
        "basic-model", "lazy-constraints", "sym-elimination",
        "heuristic-repair", "heuristic-nosym"}
    assert all(float(r[obj_at]) == 7.0 for r in rows)


def test_bench_empty_manifest(tmp_path):
    manifest = tmp_path / "empty.txt"
    manifest.write_text("# nothing\n")
    out = tmp_path / "bench.csv"
    assert main(["bench", str(manifest), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("instance,preset,")


def test_bench_rejects_unknown_preset(tmp_path, instance_file):
    manifest = tmp_path / "m.txt"
    manifest.write_text(f"presets = magic\ninstance = {instance_file}\n")
    assert main(["bench", str(manifest)]) == 4


def test_gamma_sweep_schema(tmp_path, instance_file):
    out = tmp_path / "sweep.csv"
    assert main(["gamma-sweep", str(instance_file), "--gammas", "0,1000",
                 "-o", str(out), "--time-limit", "60"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "gamma,lb,ub,gap,acc"
    assert len(lines) == 3
    zero_row = lines[1].split(",")
    assert zero_row[0] == "0" and zero_row[4] == "0"
    row_1000 = lines[2].split(",")
    assert float(row_1000[2]) == 7.0
    assert (tmp_path / "sweep.png").exists()


def test_model_dump(tmp_path, instance_file):
    out = tmp_path / "model.lp"
    assert main(["model", str(instance_file), "-o", str(out)]) == 0
    assert out.read_text().startswith("Minimize")


def test_usage_errors(tmp_path, instance_file):
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(instance_file), "--formulation", "wrong"])
    assert exc.value.code == 4
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 4
    assert main(["solve", str(tmp_path / "missing.scarp")]) == 4


def test_config_file_defaults(tmp_path, instance_file):
    cfg = tmp_path / "solver.cfg"
    cfg.write_text("time_limit = 0\n")
    assert main(["solve", str(instance_file), "--config", str(cfg)]) == 3
    # Explicit flags win over the config file.
    assert main(["solve", str(instance_file), "--config", str(cfg),
                 "--time-limit", "60"]) == 0


def test_solve_val_instance():
    val3a = ROOT / "instances" / "val" / "val3a.val"
    code = main(["solve", str(val3a), "--time-limit", "3",
                 "--formulation", "large", "--gap-tol", "0.5"])
    assert code == 0


def test_solve_then_check_val1a_self_consistent(tmp_path):
    val1a = ROOT / "instances" / "val" / "val1a.val"
    sol = tmp_path / "val1a.sol"
    code = main(["solve", str(val1a), "--time-limit", "10",
                 "--formulation", "large", "--solution", str(sol)])
    assert code == 0
    assert main(["check", str(val1a), str(sol)]) == 0


def test_infeasible_reduced_fleet_exits_2(tmp_path):
    # One edge, demand not a whole number of tanks: with no multi-edge
    # robots the large formulation cannot cover it.
    single = tmp_path / "single.scarp"
    single.write_text("NAME single\nVERTICES 2\nCAPACITY 8\nDEPOT 1\n"
                      "EDGES 1\n1 2 1 5\n")
    code = main(["solve", str(single), "--formulation", "large",
                 "--multi-robots", "0"])
    assert code == 2


def test_solve_with_two_workers(instance_file):
    assert main(["solve", str(instance_file), "--workers", "2",
                 "--time-limit", "60"]) == 0


def test_basic_preset_refuses_where_lazy_cuts_run(tmp_path):
    # The eager preset cannot even build its row set at orchard scale,
    # while lazy cuts happily produce an incumbent there.
    orchard_c = ROOT / "instances" / "orchard" / "C.scarp"
    assert main(["solve", str(orchard_c), "--no-cuts", "--no-symmetry",
                 "--no-repair", "--time-limit", "10"]) == 4
    assert main(["solve", str(orchard_c), "--time-limit", "10",
                 "--gap-tol", "0.9"]) == 0


def test_bench_rows_reproducible(tmp_path, instance_file):
    manifest = tmp_path / "m.txt"
    manifest.write_text("time_limit = 60\npresets = heuristic-repair\n"
                        f"instance = {instance_file}\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["bench", str(manifest), "-o", str(out)]) == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()]
        outs.append([r[:-1] for r in rows])     # wall-clock column aside
    assert outs[0] == outs[1]
