"""Replay a schedule against its instance and report every broken rule.

This is the ground truth for feasibility and metrics; it knows nothing about
the integer program.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from fractions import Fraction

from .model import AT_STATION, FLIGHT, FLYING, Instance, Metrics, Schedule, Violation, as_fraction

TASK = "task"                # executed <=> exactly one vehicle flies the exact window
PINNING = "pinning"          # at origin before take-off, at destination after landing
MOVEMENT = "movement"        # no position change without a flight
CAPACITY = "capacity"
LEVEL = "level"              # 0 iff grounded, 1..max_level while flying
SEPARATION = "separation"    # conflicting concurrent flights use distinct levels
SOC = "soc"
CHARGING = "charging"        # charging only while parked
INITIAL = "initial"

CATEGORIES = (TASK, PINNING, MOVEMENT, CAPACITY, LEVEL, SEPARATION, SOC, CHARGING, INITIAL)

SOC_TOL = Fraction(1, 10**9)


class ScheduleShapeError(ValueError):
    """The schedule does not cover every vehicle and timestep."""


def check_shape(instance: Instance, schedule: Schedule) -> None:
    if len(schedule.timeline) != len(instance.vehicles):
        raise ScheduleShapeError(f"timeline has {len(schedule.timeline)} rows for "
                                 f"{len(instance.vehicles)} vehicles")
    for v, row in zip(instance.vehicles, schedule.timeline):
        if len(row) != instance.horizon + 1:
            raise ScheduleShapeError(f"vehicle {v.id}: {len(row)} slots, expected "
                                     f"{instance.horizon + 1}")
        for t, s in enumerate(row):
            if s.state not in (AT_STATION, FLYING):
                raise ScheduleShapeError(f"vehicle {v.id} t={t}: unknown state {s.state!r}")


def step_cost(instance: Instance, vehicle, slot) -> Fraction:
    """Energy drawn by ``vehicle`` during one timestep in ``slot``."""
    con, hcon = as_fraction(vehicle.con), as_fraction(vehicle.hcon)
    if instance.consumption_mode == FLIGHT:
        return con + slot.level * hcon if slot.flying else Fraction(0)
    return (0 if slot.flying else con) + slot.level * hcon


def soc_trajectory(instance: Instance, vehicle, row) -> list:
    """Exact state of charge after each timestep."""
    soc = as_fraction(vehicle.soc0)
    ch = as_fraction(vehicle.ch)
    out = []
    for slot in row:
        soc += (ch if slot.charging else 0) - step_cost(instance, vehicle, slot)
        out.append(soc)
    return out


def validate_schedule(instance: Instance, schedule: Schedule) -> list:
    """All rule violations of ``schedule``; empty when it is feasible."""
    check_shape(instance, schedule)
    out = []
    T = instance.horizon
    tasks = {k.id: k for k in instance.tasks}
    stations = {s.id: s for s in instance.stations}
    rows = dict(zip((v.id for v in instance.vehicles), schedule.timeline))
    conflicts = instance.conflicts()

    # (1) task execution
    flown = defaultdict(set)                       # task -> {(vehicle, t)}
    for a, row in rows.items():
        for t, s in enumerate(row):
            if s.flying:
                if s.ref not in tasks:
                    out.append(Violation(TASK, a, t, f"flying unknown task {s.ref}"))
                else:
                    flown[s.ref].add((a, t))
    for k in schedule.executed:
        if k not in tasks:
            out.append(Violation(TASK, k, None, "executed id is not a task"))
    for k, task in tasks.items():
        slots = flown.get(k, set())
        if k in schedule.executed:
            by = {a for a, _ in slots}
            if len(by) != 1:
                out.append(Violation(TASK, k, None, f"executed by vehicles {sorted(by)}"))
                continue
            (a,) = by
            steps = sorted(t for _, t in slots)
            if steps != list(task.window()):
                out.append(Violation(TASK, k, steps[0] if steps else None,
                                     f"flown at {steps}, window is {list(task.window())}"))
                continue
            # (2) pinning
            before, after = rows[a][task.t_start - 1], rows[a][task.t_end]
            if before.state != AT_STATION or before.ref != task.origin:
                out.append(Violation(PINNING, (a, k), task.t_start - 1,
                                     f"not at origin {task.origin} before take-off"))
            if after.state != AT_STATION or after.ref != task.dest:
                out.append(Violation(PINNING, (a, k), task.t_end,
                                     f"not at destination {task.dest} after landing"))
        elif slots:
            out.append(Violation(TASK, k, min(t for _, t in slots),
                                 "flown but not marked executed"))

    for v in instance.vehicles:
        a, row = v.id, rows[v.id]
        # (9) initial state
        first = row[0]
        if first.state != AT_STATION or first.ref != v.initial_station:
            out.append(Violation(INITIAL, a, 0, f"expected at station {v.initial_station}"))
        # (3) movement: consecutive parked slots stay put; flights connect origin and dest
        last_station = None
        for t, s in enumerate(row):
            if s.state == AT_STATION:
                if s.ref not in stations:
                    out.append(Violation(MOVEMENT, a, t, f"unknown station {s.ref}"))
                elif last_station is not None and s.ref != last_station[0]:
                    prev_t = last_station[1]
                    if prev_t == t - 1:
                        out.append(Violation(MOVEMENT, a, t,
                                             f"jumped {last_station[0]} -> {s.ref} on the ground"))
                    else:
                        legs = {row[u].ref for u in range(prev_t + 1, t)}
                        task = tasks.get(next(iter(legs))) if len(legs) == 1 else None
                        if task is None or (task.origin, task.dest) != (last_station[0], s.ref):
                            out.append(Violation(MOVEMENT, a, t,
                                                 f"arrived at {s.ref} from {last_station[0]} "
                                                 f"via flights {sorted(legs)}"))
                last_station = (s.ref, t)
            if t > 0 and s.flying and row[t - 1].flying and row[t - 1].ref != s.ref:
                out.append(Violation(MOVEMENT, a, t, "switched task in mid-air"))
            # (5) levels, (8) charging
            if s.flying and not 1 <= s.level <= instance.max_level:
                out.append(Violation(LEVEL, a, t, f"flying at level {s.level}"))
            if not s.flying and s.level != 0:
                out.append(Violation(LEVEL, a, t, f"grounded at level {s.level}"))
            if s.flying and s.charging:
                out.append(Violation(CHARGING, a, t, "charging in flight"))
        # (7) state of charge
        for t, soc in enumerate(soc_trajectory(instance, v, row)):
            if soc < -SOC_TOL or soc > 100 + SOC_TOL:
                out.append(Violation(SOC, a, t, f"state of charge {float(soc):.4g}"))
                break

    for t in range(T + 1):
        # (4) capacity
        parked = Counter(row[t].ref for row in rows.values() if row[t].state == AT_STATION)
        for n, count in parked.items():
            if n in stations and count > stations[n].capacity:
                out.append(Violation(CAPACITY, n, t,
                                     f"{count} vehicles, capacity {stations[n].capacity}"))
        # (6) separation
        airborne = [(a, row[t]) for a, row in rows.items()
                    if row[t].flying and row[t].ref in tasks]
        for i, (a, s) in enumerate(airborne):
            for b, r in airborne[i + 1:]:
                if s.level == r.level and conflicts.conflicts(tasks[s.ref].edge,
                                                              tasks[r.ref].edge):
                    out.append(Violation(SEPARATION, (a, b), t,
                                         f"tasks {s.ref}/{r.ref} share level {s.level}"))
    return out


def compute_metrics(instance: Instance, schedule: Schedule) -> Metrics:
    """Executed count, energy drawn and the per-level histogram of vehicle-timesteps."""
    check_shape(instance, schedule)
    energy = Fraction(0)
    hist = [0] * (instance.max_level + 1)
    for v, row in zip(instance.vehicles, schedule.timeline):
        for slot in row:
            energy += step_cost(instance, v, slot)
            if 0 <= slot.level <= instance.max_level:
                hist[slot.level] += 1
    return Metrics(len(schedule.executed), float(energy), tuple(hist))


def violations_to_json(violations) -> list:
    return [v.to_json() for v in violations]
