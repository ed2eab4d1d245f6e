"""Brute-force ground truth for tiny instances, with no integer programming.

Flight levels only interact across vehicles within a timestep, so once the
task assignment is fixed the altitude term splits into one min-sum coloring
problem per timestep.
"""
from __future__ import annotations

import time
from collections import Counter
from fractions import Fraction

from .model import AT_STATION, FLYING, Instance, Schedule, Slot, as_fraction
from .validator import compute_metrics, step_cost

MAX_VEHICLES, MAX_TASKS, MAX_HORIZON = 3, 7, 12


class OracleLimitError(ValueError):
    """Instance too large for exhaustive search."""


def min_sum_levels(adjacency: dict, max_level: int):
    """Distinct levels in 1..max_level for adjacent vertices with the smallest sum.

    ``adjacency`` maps each vertex to the set of its neighbours.  Returns
    ``(levels, total)`` or ``None`` when no assignment exists.
    """
    verts = sorted(adjacency, key=lambda v: (-len(adjacency[v]), v))
    if not verts:
        return {}, 0
    best = [None, None]
    levels = {}

    def search(i, total):
        remaining = len(verts) - i
        if best[1] is not None and total + remaining >= best[1]:
            return
        if i == len(verts):
            best[0], best[1] = dict(levels), total
            return
        v = verts[i]
        taken = {levels[u] for u in adjacency[v] if u in levels}
        for lvl in range(1, max_level + 1):
            if lvl in taken:
                continue
            levels[v] = lvl
            search(i + 1, total + lvl)
            del levels[v]

    search(0, 0)
    if best[1] is None:
        return None
    return best[0], best[1]


def greedy_charging(instance: Instance, vehicle, row) -> list | None:
    """Charge whenever parked and the charge fits under 100; None if SoC drops below 0."""
    soc = as_fraction(vehicle.soc0)
    ch = as_fraction(vehicle.ch)
    flags = []
    for slot in row:
        soc -= step_cost(instance, vehicle, slot)
        charge = slot.state == AT_STATION and soc + ch <= 100
        if charge:
            soc += ch
        if soc < 0 or soc > 100:
            return None
        flags.append(charge)
    return flags


def exact_charging(instance: Instance, vehicle, row) -> list | None:
    """Any charging pattern keeping SoC within [0, 100], found by search over charge counts.

    The state after t steps is fully described by how many charges happened,
    so the reachable set has at most t + 1 elements.
    """
    soc0, ch = as_fraction(vehicle.soc0), as_fraction(vehicle.ch)
    spent = Fraction(0)
    reach = {0: None}            # charges so far -> (previous count, charged?)
    history = []
    for slot in row:
        spent += step_cost(instance, vehicle, slot)
        nxt = {}
        for k in reach:
            options = (True, False) if slot.state == AT_STATION else (False,)
            for charge in options:
                k2 = k + charge
                soc = soc0 + k2 * ch - spent
                if 0 <= soc <= 100 and k2 not in nxt:
                    nxt[k2] = (k, charge)
        if not nxt:
            return None
        history.append(nxt)
        reach = nxt
    k = max(reach)
    flags = []
    for layer in reversed(history):
        prev, charge = layer[k]
        flags.append(charge)
        k = prev
    return flags[::-1]


def _chain_ok(vehicle, tasks) -> bool:
    # tasks sorted by start; the vehicle must be waiting at each origin one step early
    here, free_at = vehicle.initial_station, 0
    for task in tasks:
        if task.origin != here or task.t_start - 1 < free_at:
            return False
        here, free_at = task.dest, task.t_end
    return True


def _rows_for(instance, assignment):
    rows = []
    for v in instance.vehicles:
        mine = sorted((k for k in instance.tasks if assignment.get(k.id) == v.id),
                      key=lambda k: k.t_start)
        row, here = [], v.initial_station
        by_t = {}
        for task in mine:
            for t in task.window():
                by_t[t] = task
        for t in instance.timesteps:
            task = by_t.get(t)
            if task is not None:
                row.append(Slot(FLYING, task.id))
                here = task.dest
            else:
                row.append(Slot(AT_STATION, here))
        rows.append(row)
    return rows


def _capacity_ok(instance, rows) -> bool:
    caps = {s.id: s.capacity for s in instance.stations}
    for t in instance.timesteps:
        count = Counter(row[t].ref for row in rows if row[t].state == AT_STATION)
        if any(c > caps[n] for n, c in count.items()):
            return False
    return True


def _levels(instance, rows, conflicts):
    total = 0
    assigned = [list(row) for row in rows]
    for t in instance.timesteps:
        up = [i for i, row in enumerate(rows) if row[t].flying]
        if not up:
            continue
        adj = {i: set() for i in up}
        for x in up:
            for y in up:
                if x < y and conflicts.conflicts(instance.task(rows[x][t].ref).edge,
                                                 instance.task(rows[y][t].ref).edge):
                    adj[x].add(y)
                    adj[y].add(x)
        res = min_sum_levels(adj, instance.max_level)
        if res is None:
            return None
        lv, s = res
        total += s
        for i, level in lv.items():
            assigned[i][t] = Slot(FLYING, rows[i][t].ref, level)
    return assigned, total


def _evaluate(instance, assignment, conflicts):
    """Full schedule for an assignment, or None when infeasible."""
    rows = _rows_for(instance, assignment)
    if not _capacity_ok(instance, rows):
        return None
    res = _levels(instance, rows, conflicts)
    if res is None:
        return None
    rows, total = res
    charged = []
    for v, row in zip(instance.vehicles, rows):
        flags = greedy_charging(instance, v, row)
        if flags is None:
            flags = exact_charging(instance, v, row)
        if flags is None:
            return None
        charged.append([Slot(s.state, s.ref, s.level, f) for s, f in zip(row, flags)])
    return Schedule(charged, frozenset(assignment)), total


def solve_exact(instance: Instance):
    """Lexicographic optimum by enumeration: most tasks, then smallest level sum.

    Ties are broken by the smallest assignment encoding (per task, 0 for
    unassigned or 1 + vehicle position).  Returns ``(Schedule, Metrics)``.
    """
    if (len(instance.vehicles) > MAX_VEHICLES or len(instance.tasks) > MAX_TASKS
            or instance.horizon > MAX_HORIZON):
        raise OracleLimitError(
            f"oracle handles at most {MAX_VEHICLES} vehicles, {MAX_TASKS} tasks and "
            f"horizon {MAX_HORIZON}")
    start = time.perf_counter()
    conflicts = instance.conflicts()
    # search in start order so every partial chain is a time-ordered prefix
    tasks = sorted(instance.tasks, key=lambda k: (k.t_start, k.id))
    position = {k.id: i for i, k in enumerate(instance.tasks)}
    vehicles = list(instance.vehicles)
    best = {"key": None, "schedule": None}
    per_vehicle = {v.id: [] for v in vehicles}
    choice = []

    def visit(i, count):
        if best["key"] is not None and count + (len(tasks) - i) < -best["key"][0]:
            return
        if i == len(tasks):
            assignment = {tasks[j].id: vehicles[c - 1].id for j, c in enumerate(choice) if c}
            res = _evaluate(instance, assignment, conflicts)
            if res is None:
                return
            schedule, total = res
            code = [0] * len(tasks)
            for j, c in enumerate(choice):
                code[position[tasks[j].id]] = c
            key = (-count, total, tuple(code))
            if best["key"] is None or key < best["key"]:
                best["key"], best["schedule"] = key, schedule
            return
        task = tasks[i]
        for c in range(len(vehicles) + 1):
            if c == 0:
                choice.append(0)
                visit(i + 1, count)
                choice.pop()
                continue
            v = vehicles[c - 1]
            if not _chain_ok(v, per_vehicle[v.id] + [task]):
                continue
            per_vehicle[v.id].append(task)
            choice.append(c)
            visit(i + 1, count + 1)
            choice.pop()
            per_vehicle[v.id].pop()

    visit(0, 0)
    schedule = best["schedule"]
    if schedule is None:
        raise ValueError("no feasible schedule, not even the all-idle one")
    metrics = compute_metrics(instance, schedule)
    metrics.wall_clock = time.perf_counter() - start
    metrics.extra["level_sum"] = best["key"][1]
    return schedule, metrics
