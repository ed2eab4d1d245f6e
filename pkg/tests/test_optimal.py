import sys
import textwrap
from fractions import Fraction

import pytest

from uamsched import milp
from uamsched.model import Instance, generate_instance, restrict
from uamsched.optimal import (LITERAL, TIGHT, ModelBugError, OptimalConfig, SolveTimeout,
                              build_model, conflicting_task_pairs, mu_for, solve_optimal)
from uamsched.validator import validate_schedule

from helpers import SQUARE, crossing_instance, make_instance, tiny_instance

LIT = OptimalConfig(formulation=LITERAL)


def test_mu_examples():
    inst = generate_instance(0, 8, 5, 10)
    assert mu_for(inst) == Fraction(1, 621)
    one = make_instance([(0, 0), (1, 1)], [0], [], horizon=0, max_level=1)
    assert mu_for(one) == Fraction(1, 2)


@pytest.mark.parametrize("seed", range(5))
def test_mu_never_outweighs_a_task(seed):
    inst = tiny_instance(seed)
    worst = len(inst.vehicles) * (inst.horizon + 1) * inst.max_level
    assert mu_for(inst) * worst < 1


def test_variable_counts_single_task():
    inst = make_instance([(0, 0), (5, 5)], [0], [(0, 1, 2, 3)], horizon=6)
    model, ix = build_model(inst, config=LIT)
    T1 = inst.horizon + 1
    assert len(ix.lam) == 1
    assert len(ix.eps) == 3
    assert len(ix.om) == 1 * T1 * 2
    assert len(ix.h) == len(ix.phi) == T1
    assert ix.separation == []


def test_no_conflicts_no_separation_binaries():
    # strict policy on a triangle: nothing intersects
    inst = make_instance([(0, 0), (4, 0), (1, 3)], [0, 1], [(0, 1, 1, 3), (1, 2, 1, 3)],
                         policy="strict")
    model, ix = build_model(inst, config=LIT)
    assert conflicting_task_pairs(inst, inst.conflicts()) == []
    assert ix.separation == []


def test_crossing_pair_binaries_per_overlap_step():
    inst = crossing_instance()
    model, ix = build_model(inst, config=LIT)
    (p, q, overlap), = conflicting_task_pairs(inst, inst.conflicts())
    assert list(overlap) == [2, 3, 4]
    assert len(ix.separation) == 2 * len(overlap)
    assert all(z in model.binaries for z in ix.separation)


def test_same_edge_tasks_always_conflict():
    inst = make_instance(SQUARE, [0, 0], [(0, 1, 1, 2), (0, 1, 2, 2)], policy="strict")
    (p, q, overlap), = conflicting_task_pairs(inst, inst.conflicts())
    assert list(overlap) == [2]


@pytest.mark.parametrize("formulation", [TIGHT, LITERAL])
def test_single_flight_energy(formulation):
    inst = make_instance([(0, 0), (5, 5)], [0], [(0, 1, 2, 2)], horizon=6)
    sched, metrics = solve_optimal(inst, OptimalConfig(formulation=formulation))
    assert sched.executed == {0}
    row = sched.timeline[0]
    assert [s.flying for s in row] == [False, False, True, True, False, False, False]
    assert [row[2].level, row[3].level] == [1, 1]
    assert metrics.energy_units == pytest.approx(10.2)
    # mu = 1 / (1 * 7 * 4 + 1)
    assert metrics.extra["objective"] == pytest.approx(1 - 2 / 29)
    assert validate_schedule(inst, sched) == []


def test_unreachable_origin_is_not_executed():
    inst = make_instance([(0, 0), (5, 5), (9, 0)], [0], [(1, 2, 2, 2)], horizon=6)
    sched, metrics = solve_optimal(inst)
    assert sched.executed == frozenset() and metrics.executed_count == 0


def test_zero_tasks_idle():
    inst = make_instance([(0, 0), (5, 5)], [0, 1], [], horizon=5)
    sched, metrics = solve_optimal(inst)
    assert sched.level_sum() == 0 and metrics.energy_units == 0
    assert metrics.extra["objective"] == 0
    assert all(s.ref == home and not s.flying for row, home in zip(sched.timeline, [0, 1])
               for s in row)


def test_crossing_pair_levels():
    sched, metrics = solve_optimal(crossing_instance())
    assert sched.executed == {0, 1}
    for t in (2, 3, 4):
        assert sorted(row[t].level for row in sched.timeline) == [1, 2]
    assert metrics.level_histogram[1:] == (3, 3, 0, 0)


def test_chained_tasks_need_the_vehicle_to_arrive():
    # 0 -> 1 lands at t=4, 1 -> 2 departs at t=5: one vehicle does both
    inst = make_instance([(0, 0), (5, 5), (9, 0)], [0], [(0, 1, 2, 2), (1, 2, 5, 2)], horizon=8)
    sched, _ = solve_optimal(inst)
    assert sched.executed == {0, 1}
    # departing at t=4 is one step too early
    inst = make_instance([(0, 0), (5, 5), (9, 0)], [0], [(0, 1, 2, 2), (1, 2, 4, 2)], horizon=8)
    sched, _ = solve_optimal(inst)
    assert len(sched.executed) == 1


def test_battery_limits_flights():
    # each 4-step flight costs 20.4; with soc0 = 30 and no time to recharge only one fits
    inst = make_instance([(0, 0), (5, 5)], [0], [(0, 1, 1, 4), (1, 0, 6, 4)], horizon=10,
                         soc0=30, ch=1)
    sched, _ = solve_optimal(inst)
    assert len(sched.executed) == 1
    assert validate_schedule(inst, sched) == []


def test_literal_consumption_mode_is_valid():
    inst = generate_instance(4, 4, 2, 6, horizon=10, consumption_mode="literal")
    sched, _ = solve_optimal(inst)
    assert validate_schedule(inst, sched) == []


@pytest.mark.parametrize("seed", range(6))
def test_formulations_agree(seed):
    inst = tiny_instance(seed)
    a, ma = solve_optimal(inst, OptimalConfig(formulation=TIGHT))
    b, mb = solve_optimal(inst, LIT)
    assert (ma.executed_count, a.level_sum()) == (mb.executed_count, b.level_sum())
    assert validate_schedule(inst, a) == [] and validate_schedule(inst, b) == []


@pytest.mark.parametrize("seed", range(4))
def test_adding_a_vehicle_never_hurts(seed):
    big = generate_instance(seed, 5, 3, 14, horizon=14)
    small = restrict(big, vehicles=big.vehicles[:2])
    assert solve_optimal(big)[1].executed_count >= solve_optimal(small)[1].executed_count


def test_invalid_instance_rejected():
    with pytest.raises(ValueError, match="self-loop"):
        build_model(make_instance([(0, 0), (5, 5)], [0], [(1, 1, 1, 1)]))
    with pytest.raises(ValueError):
        build_model(make_instance([(0, 0), (5, 5)], [0], []), config=OptimalConfig(
            formulation="loose"))


def _fake(tmp_path, status):
    script = tmp_path / "fake.py"
    script.write_text(textwrap.dedent(f"""\
        import sys
        open(sys.argv[2], "w").write("{status}\\n")
        """))
    return milp.BackendConfig(f"{sys.executable} {script} {{lp}} {{sol}}")


def test_timeout_carries_no_schedule(tmp_path):
    inst = crossing_instance()
    with pytest.raises(SolveTimeout) as info:
        solve_optimal(inst, OptimalConfig(backend=_fake(tmp_path, "timeout")))
    assert info.value.outcome.status == milp.TIMEOUT


def test_infeasible_report_signals_model_bug(tmp_path):
    with pytest.raises(ModelBugError):
        solve_optimal(crossing_instance(), OptimalConfig(backend=_fake(tmp_path, "infeasible")))


def test_horizon_zero_instance_is_rejected():
    inst = Instance([], [], [], horizon=0)
    with pytest.raises(ValueError):
        build_model(inst)
