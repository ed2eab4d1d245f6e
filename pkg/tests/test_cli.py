import csv
import json

import pytest

from uamsched.bench import BenchConfig, cells_for, columns
from uamsched.cli import main
from uamsched.model import Schedule, Slot, read_schedule, write_schedule


@pytest.fixture
def instance(tmp_path):
    assert main(["gen", "--seed", "7", "--stations", "4", "--vehicles", "2", "--tasks", "5",
                 "--horizon", "9", "--max-level", "3", "--out-dir", str(tmp_path)]) == 0
    return tmp_path / "instance_7.json"


def _solve(capsys, instance, algo, *extra):
    capsys.readouterr()
    code = main(["solve", str(instance), "--algo", algo, "--out-dir", str(instance.parent),
                 *extra])
    assert code == 0
    return json.loads(capsys.readouterr().out)


def test_gen_is_reproducible(tmp_path, instance):
    again = tmp_path / "again.json"
    assert main(["gen", "--seed", "7", "--stations", "4", "--vehicles", "2", "--tasks", "5",
                 "--horizon", "9", "--max-level", "3", "-o", str(again)]) == 0
    assert again.read_bytes() == instance.read_bytes()


@pytest.mark.parametrize("algo", ["oracle", "optimal", "incr"])
def test_solve_then_validate(capsys, instance, algo):
    doc = _solve(capsys, instance, algo)
    assert set(doc) >= {"executed_count", "energy_units", "level_histogram", "wall_clock"}
    assert main(["validate", str(instance), doc["schedule"]]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_incr_never_beats_optimal(capsys, instance):
    opt = _solve(capsys, instance, "optimal")
    inc = _solve(capsys, instance, "incr", "--order", "seed:3")
    assert inc["executed_count"] <= opt["executed_count"]


def test_validate_reports_violations(capsys, instance):
    doc = _solve(capsys, instance, "oracle")
    sched = read_schedule(doc["schedule"])
    rows = [list(r) for r in sched.timeline]
    rows[0][0] = Slot("flying", 0, 1)
    write_schedule(Schedule(rows, sched.executed), doc["schedule"])
    assert main(["validate", str(instance), doc["schedule"]]) == 1
    assert json.loads(capsys.readouterr().out)


def test_usage_errors(tmp_path, instance):
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    assert main(["solve", str(instance), "--no-such-flag"]) == 2
    assert main(["solve", str(instance), "--algo", "magic"]) == 2
    assert main([]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert main(["validate", str(tmp_path / "broken.json"), str(instance)]) == 2


def test_conflicts_dump(capsys, instance):
    capsys.readouterr()
    assert main(["conflicts", str(instance), "--endpoint-policy", "strict"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc) == 6 and all("-" in k for k in doc)


def test_keep_artifacts(capsys, instance):
    _solve(capsys, instance, "optimal", "--keep-artifacts")
    kept = list((instance.parent / "artifacts").iterdir())
    assert {p.suffix for p in kept} == {".lp", ".sol"}


def test_bench_writes_csv_and_figures(tmp_path, capsys):
    out = tmp_path / "bench"
    assert main(["bench", "exp2", "--reps", "1", "--sweeps", "tasks,large",
                 "--task-range", "4,8", "--large-vehicles", "6", "--large-tasks", "10",
                 "--out-dir", str(out), "--time-limit", "60"]) == 0
    with open(out / "exp2.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == columns(4)
    assert [(r["sweep"], r["x"], r["algo"]) for r in rows] == [
        ("tasks", "4", "optimal"), ("tasks", "4", "incr"),
        ("tasks", "8", "optimal"), ("tasks", "8", "incr"), ("large", "6", "incr")]
    assert all(r["status"] == "ok" for r in rows)
    pngs = sorted(p.name for p in out.glob("*.png"))
    assert "exp2_tasks_executed.png" in pngs and "exp2_large_runtime.png" in pngs
    assert all((out / p).stat().st_size > 1000 for p in pngs)


def test_bench_rejects_foreign_sweep(tmp_path):
    assert main(["bench", "exp1", "--sweeps", "large", "--out-dir", str(tmp_path)]) == 2


def test_bench_cells_and_reruns_are_stable():
    cfg = BenchConfig(reps=2, task_range=(5,), vehicle_range=(2,), station_range=(3,),
                      n_tasks=5, horizon=10)
    cells = cells_for(cfg, "exp1")
    assert [(c.sweep, c.x, c.seed) for c in cells] == [
        ("tasks", 5, 0), ("tasks", 5, 1), ("vehicles", 2, 0), ("vehicles", 2, 1),
        ("stations", 3, 0), ("stations", 3, 1)]
    from uamsched.bench import run_experiment
    strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    assert strip(run_experiment(cfg, "exp1")) == strip(run_experiment(cfg, "exp1"))
