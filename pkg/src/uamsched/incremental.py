"""Per-vehicle decomposition: solve the single-vehicle program once per vehicle.

Each round sees only the tasks nobody has taken yet and must keep clear of
the flight levels already committed by earlier vehicles.
"""
from __future__ import annotations

import logging
import random
import time
from collections import Counter
from dataclasses import dataclass

from .milp import BackendError
from .model import AT_STATION, Instance, Schedule, restrict
from .optimal import ModelBugError, OptimalConfig, SchedulingError, build_model, run_model

log = logging.getLogger(__name__)

# how home stations of vehicles not yet scheduled are held, see run_incremental
LAZY, ALL = "lazy", "all"


class HIncrTable:
    """Flight levels committed by already scheduled vehicles.

    Maps ``(vehicle, t)`` to ``(level, edge)`` for every flying timestep.
    """

    def __init__(self):
        self.entries = {}

    def commit(self, instance: Instance, vehicle_id: int, row) -> None:
        for t, slot in enumerate(row):
            if slot.flying:
                self.entries[vehicle_id, t] = (slot.level, instance.task(slot.ref).edge)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key):
        return self.entries[key]


def occupancy_table(instance: Instance, rows: dict, pending) -> Counter:
    """Station slots taken by committed rows and by the given unscheduled vehicles.

    Those vehicles are assumed parked at their initial station, so every
    commitment leaves room for them to stay idle.
    """
    occ = Counter()
    for row in rows.values():
        for t, slot in enumerate(row):
            if slot.state == AT_STATION:
                occ[t, slot.ref] += 1
    for v in pending:
        for t in instance.timesteps:
            occ[t, v.initial_station] += 1
    return occ


def build_single_vehicle_model(instance: Instance, vehicle, remaining_tasks, hincr,
                               conflict_sets=None, config: OptimalConfig | None = None,
                               occupancy=None):
    """The monolithic program restricted to one vehicle and the remaining tasks."""
    sub = restrict(instance, vehicles=[vehicle], tasks=remaining_tasks)
    conflicts = conflict_sets if conflict_sets is not None else instance.conflicts()
    entries = hincr.entries if isinstance(hincr, HIncrTable) else dict(hincr or {})
    return build_model(sub, conflicts, config, committed=entries, occupancy=occupancy)


def resolve_order(instance: Instance, order=None) -> list:
    """Vehicle ids in solve order: input order, an explicit permutation, or ``"seed:N"``."""
    ids = [v.id for v in instance.vehicles]
    if order is None or order == "input":
        return ids
    if isinstance(order, str) and order.startswith("seed:"):
        rng = random.Random(int(order.split(":", 1)[1]))
        rng.shuffle(ids)
        return ids
    order = list(order)
    if sorted(order) != sorted(ids):
        raise ValueError(f"order {order} is not a permutation of vehicle ids {ids}")
    return order


@dataclass
class IncrementalRun:
    schedule: Schedule
    metrics: object
    hincr: HIncrTable
    order: list
    protected: frozenset = frozenset()
    restarts: int = 0


def solve_incremental(instance: Instance, config: OptimalConfig | None = None, order=None,
                      ignore_occupancy: bool = False, reserve: str = LAZY):
    """Schedule vehicles one at a time; returns ``(Schedule, Metrics)``.

    With ``ignore_occupancy`` the capacity left by committed vehicles is ignored,
    as in the plain decomposition; merged schedules may then overfill stations.
    ``reserve`` picks how home stations of unscheduled vehicles are held, see
    :func:`run_incremental`.
    """
    run = run_incremental(instance, config, order, ignore_occupancy, reserve)
    return run.schedule, run.metrics


def _fits(instance, occupancy, row) -> bool:
    cap = {s.id: s.capacity for s in instance.stations}
    return all(occupancy[t, s.ref] < cap[s.ref]
               for t, s in enumerate(row) if s.state == AT_STATION)


def run_incremental(instance: Instance, config: OptimalConfig | None = None, order=None,
                    ignore_occupancy: bool = False, reserve: str = LAZY) -> IncrementalRun:
    """Run the decomposition.

    ``reserve="all"`` keeps the home station of every unscheduled vehicle free
    for the whole horizon, so each round is feasible on the first try.
    ``reserve="lazy"`` (default) holds only committed occupancy.  When a later
    vehicle finds its home full and has no feasible plan, it joins a protected
    set whose homes are always held, and the pass is repeated.  Rounds whose
    inputs did not change keep their earlier plan when it still fits, since a
    plan that was optimal stays optimal under a tighter capacity.
    """
    if reserve not in (LAZY, ALL):
        raise ValueError(f"unknown reserve mode {reserve!r}")
    config = config or OptimalConfig()
    start = time.perf_counter()
    order = resolve_order(instance, order)
    protected = set(order) if reserve == ALL else set()
    previous = []
    solver_seconds = 0.0
    restarts = 0
    while True:
        try:
            rows, executed, hincr, secs = _one_pass(instance, config, order, ignore_occupancy,
                                                    protected, previous)
            solver_seconds += secs
            break
        except _Blocked as blocked:
            solver_seconds += blocked.seconds
            protected.add(blocked.vid)
            previous = blocked.committed
            restarts += 1
            log.debug("vehicle %s blocked at home; protecting it and restarting", blocked.vid)

    from .validator import compute_metrics
    merged = Schedule([rows[v.id] for v in instance.vehicles], frozenset(executed))
    metrics = compute_metrics(instance, merged)
    metrics.wall_clock = time.perf_counter() - start
    metrics.extra["solver_seconds"] = solver_seconds
    metrics.extra["restarts"] = restarts
    return IncrementalRun(merged, metrics, hincr, order, frozenset(protected), restarts)


class _Blocked(Exception):
    def __init__(self, vid, committed, seconds):
        super().__init__(vid)
        self.vid, self.committed, self.seconds = vid, committed, seconds


def _one_pass(instance, config, order, ignore_occupancy, protected, previous):
    conflicts = instance.conflicts()
    hincr = HIncrTable()
    remaining = list(instance.tasks)
    executed = set()
    rows = {}
    committed = []          # (vid, row, executed ids) in solve order
    seconds = 0.0
    reusing = True
    for pos, vid in enumerate(order):
        vehicle = instance.vehicle(vid)
        occupancy = None
        if not ignore_occupancy:
            pending = [instance.vehicle(u) for u in order[pos + 1:] if u in protected]
            occupancy = occupancy_table(instance, rows, pending)
        reusing = reusing and pos < len(previous) and previous[pos][0] == vid
        if reusing and (occupancy is None or _fits(instance, occupancy, previous[pos][1])):
            _, row, new = previous[pos]
        else:
            reusing = False
            model, ix = build_single_vehicle_model(instance, vehicle, remaining, hincr,
                                                   conflicts, config, occupancy)
            sub = restrict(instance, vehicles=[vehicle], tasks=remaining)
            try:
                sched, outcome = run_model(model, ix, sub, config, tag=f"incr_v{vid}")
            except ModelBugError as exc:
                if occupancy is None or vid in protected:
                    raise SchedulingError(f"vehicle {vid}: {exc}") from exc
                raise _Blocked(vid, committed, seconds) from exc
            except (SchedulingError, BackendError) as exc:
                raise SchedulingError(f"vehicle {vid}: {exc}") from exc
            seconds += outcome.solver_seconds
            row, new = sched.timeline[0], sched.executed
        log.debug("vehicle %s takes tasks %s", vid, sorted(new))
        executed |= new
        remaining = [k for k in remaining if k.id not in new]
        rows[vid] = row
        hincr.commit(instance, vid, row)
        committed.append((vid, row, new))
    return rows, executed, hincr, seconds
