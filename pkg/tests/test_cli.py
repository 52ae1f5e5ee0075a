import csv
import io
import json

import pytest

from moldsched.cli import bench_ratios, main


def gen(*argv):
    return main([str(a) for a in argv])


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


@pytest.fixture
def files(tmp_path, capsys):
    dag = tmp_path / "dag.json"
    gen(*["generate", "--kind", "random-dag", "--n", "6", "--d", "2", "--seed", "3", "--out", dag])
    small = tmp_path / "small.json"
    gen(*["generate", "--kind", "tree", "--n", "4", "--d", "1", "--cap-min", "3", "--cap-max", "3",
          "--out", small])
    e2 = tmp_path / "e2.json"
    e2.write_text(json.dumps({"d": 1, "capacities": [2], "jobs": [
        {"id": x, "alternatives": [{"alloc": [1], "time": "2/1"}, {"alloc": [2], "time": "1/1"}]} for x in "ab"],
        "edges": []}))
    lb = tmp_path / "lb.json"
    gen(*["generate", "--kind", "lowerbound", "--d", "2", "--M", "9", "--out", lb])
    capsys.readouterr()
    return {"dag": dag, "small": small, "e2": e2, "lb": lb, "dir": tmp_path}


def test_run_e2_independent(files, capsys):
    code, out = run(capsys, "run", files["e2"], "--method", "independent")
    rep = json.loads(out)
    assert code == 0 and rep["L_initial"] == "2/1" and rep["L_min"] == "2/1"
    assert rep["graph_class"] == "independent" and rep["ok"]


def test_run_exact_oracle_reports_t_opt(files, capsys):
    code, out = run(capsys, "run", files["e2"], "--method", "exact-oracle")
    rep = json.loads(out)
    assert code == 0 and rep["T_opt"] == "2/1" and rep["ratio_to_T_opt"] >= 1


def test_strict_refusal(files, capsys):
    code, out = run(capsys, "run", files["small"], "--method", "lp", "--strict")
    rep = json.loads(out)
    assert code == 1 and "7" in rep["refusal"] and rep["pmin"] == 3
    code, _ = run(capsys, "run", files["small"], "--method", "lp")
    assert code == 0


def test_invalid_input_exit_2(files, capsys):
    bad = files["dir"] / "bad.json"
    bad.write_text('{"d": 1, "capacities": [1.5], "jobs": [], "edges": []}')
    assert run(capsys, "run", bad)[0] == 2
    assert run(capsys, "run", files["dag"], "--method", "independent")[0] == 2
    assert run(capsys, "run", files["dir"] / "missing.json")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", str(files["dag"]), "--method", "magic"])
    assert exc.value.code == 2


def test_generate_allocate_schedule_verify(files, capsys):
    d = files["dir"]
    code, _ = run(capsys, "allocate", files["dag"], "--out", d / "alloc.json")
    assert code == 0
    alloc = json.loads((d / "alloc.json").read_text())
    assert set(alloc["final"]) == set(alloc["initial"])
    code, _ = run(capsys, "schedule", files["dag"], "--allocation", d / "alloc.json", "--policy", "critical-path",
                  "--out", d / "s.json")
    assert code == 0
    code, out = run(capsys, "verify", files["dag"], d / "s.json", "--mu", "2/5")
    assert code == 0 and json.loads(out)["valid"]
    sched = json.loads((d / "s.json").read_text())
    first = next(iter(sched["start_times"]))
    sched["start_times"] = {k: "0/1" for k in sched["start_times"]}
    sched["makespan"] = "1/1"
    (d / "bad.json").write_text(json.dumps(sched))
    code, out = run(capsys, "verify", files["dag"], d / "bad.json")
    assert code == 1 and not json.loads(out)["valid"] and first


def test_schedule_lower_bound_orders(files, capsys):
    code, out = run(capsys, "schedule", files["lb"], "--policy", "explicit-order", "--order", "adversarial",
                    "--method", "exact-oracle")
    # one alternative per job: the oracle's search space is a single decision
    assert code == 0 and json.loads(out)["makespan"] == "21/1"
    ids = json.loads(files["lb"].read_text())["jobs"]
    alloc = files["dir"] / "unit.json"
    alloc.write_text(json.dumps({j["id"]: j["alternatives"][0]["alloc"] for j in ids}))
    for order, T in (("optimal", "10/1"), ("adversarial", "21/1")):
        code, out = run(capsys, "schedule", files["lb"], "--allocation", alloc, "--policy", "explicit-order",
                        "--order", order)
        assert code == 0 and json.loads(out)["makespan"] == T


def test_run_batch_deterministic_across_workers(files, capsys, tmp_path):
    gen(*["generate", "--kind", "sp", "--count", "4", "--n", "6", "--d", "2", "--out", tmp_path / "many"])
    paths = sorted((tmp_path / "many").glob("*.json"))
    capsys.readouterr()
    _, one = run(capsys, "run", *paths, "--seed", "5")
    _, again = run(capsys, "run", *paths, "--seed", "5")
    _, pool = run(capsys, "run", *paths, "--seed", "5", "--workers", "3")
    assert one == again == pool
    code, out = run(capsys, "run", *paths, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4 and all(r["ok"] == "True" for r in rows)
    code, _ = run(capsys, "run", *paths, "--out", tmp_path / "reports")
    assert (tmp_path / "reports" / "summary.csv").exists()
    assert len(list((tmp_path / "reports").glob("*.schedule.json"))) == 4


def test_bench(capsys):
    code, out = run(capsys, "bench", "--d-min", "1", "--d-max", "50")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [int(r["d"]) for r in rows] == list(range(1, 51))
    assert rows[20]["branch"] == "golden" and rows[21]["branch"] == "quartic"
    assert float(rows[0]["theorem1_ratio"]) == pytest.approx(5.1623, abs=1e-3)
    with pytest.raises(Exception):
        bench_ratios(5, 4)
