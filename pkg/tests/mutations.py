"""Single-corruption mutators for valid schedules.

Each mutator returns a corrupted copy, or None when the schedule offers no
place to apply it.  The expected validator category is in ``MUTATORS``.
"""
from __future__ import annotations

from collections import Counter

from uamsched.model import AT_STATION, FLYING, Schedule, Slot
from uamsched.validator import CAPACITY, MOVEMENT, SEPARATION, SOC, TASK


def _rows(schedule):
    return [list(row) for row in schedule.timeline]


def shift_flight(inst, schedule, rng):
    T = inst.horizon
    choices = []
    for a, row in enumerate(schedule.timeline):
        for k in sorted(schedule.executed):
            task = inst.task(k)
            if not (row[task.t_start].flying and row[task.t_start].ref == k):
                continue
            if task.t_end <= T:           # later: slot t_end becomes airborne
                choices.append((a, task, +1))
            if task.t_start >= 2:         # earlier, without touching t=0
                choices.append((a, task, -1))
    if not choices:
        return None
    a, task, d = choices[rng.randrange(len(choices))]
    rows = _rows(schedule)
    row = rows[a]
    level = row[task.t_start].level
    if d == 1:
        row[task.t_start] = Slot(AT_STATION, task.origin)
        row[task.t_end] = Slot(FLYING, task.id, level)
    else:
        row[task.t_end - 1] = Slot(AT_STATION, task.dest)
        row[task.t_start - 1] = Slot(FLYING, task.id, level)
    return Schedule(rows, schedule.executed)


def _float_soc_ok(inst, vehicle, row):
    soc = vehicle.soc0
    for s in row:
        if inst.consumption_mode == "flight":
            cost = vehicle.con + s.level * vehicle.hcon if s.flying else 0.0
        else:
            cost = (0.0 if s.flying else vehicle.con) + s.level * vehicle.hcon
        soc += (vehicle.ch if s.charging else 0.0) - cost
        if soc < -1e-6:
            return False
    return True


def drop_needed_charge(inst, schedule, rng):
    # a charging flag whose removal makes the plain float replay go negative
    needed = []
    for a, (v, row) in enumerate(zip(inst.vehicles, schedule.timeline)):
        for t, s in enumerate(row):
            if s.charging:
                trial = list(row)
                trial[t] = Slot(s.state, s.ref, s.level, False)
                if not _float_soc_ok(inst, v, trial):
                    needed.append((a, t))
    if not needed:
        return None
    a, t = needed[rng.randrange(len(needed))]
    rows = _rows(schedule)
    s = rows[a][t]
    rows[a][t] = Slot(s.state, s.ref, s.level, False)
    return Schedule(rows, schedule.executed)


def equalize_levels(inst, schedule, rng):
    conflicts = inst.conflicts()
    pairs = []
    for t in inst.timesteps:
        up = [(a, row[t]) for a, row in enumerate(schedule.timeline) if row[t].flying]
        for i, (a, s) in enumerate(up):
            for b, r in up[i + 1:]:
                if conflicts.conflicts(inst.task(s.ref).edge, inst.task(r.ref).edge):
                    pairs.append((t, a, b))
    if not pairs:
        return None
    t, a, b = pairs[rng.randrange(len(pairs))]
    rows = _rows(schedule)
    s = rows[b][t]
    rows[b][t] = Slot(s.state, s.ref, rows[a][t].level, s.charging)
    return Schedule(rows, schedule.executed)


def teleport(inst, schedule, rng):
    spots = [(a, t) for a, row in enumerate(schedule.timeline) for t in range(1, len(row))
             if row[t].state == AT_STATION and row[t - 1].state == AT_STATION]
    if not spots:
        return None
    a, t = spots[rng.randrange(len(spots))]
    rows = _rows(schedule)
    s = rows[a][t]
    others = [st.id for st in inst.stations if st.id != s.ref]
    rows[a][t] = Slot(AT_STATION, others[rng.randrange(len(others))], 0, s.charging)
    return Schedule(rows, schedule.executed)


def overfill(inst, schedule, rng):
    caps = {s.id: s.capacity for s in inst.stations}
    spots = []
    for t in inst.timesteps:
        parked = [a for a, row in enumerate(schedule.timeline) if row[t].state == AT_STATION]
        for n, cap in caps.items():
            if len(parked) > cap:
                spots.append((t, n))
    if not spots:
        return None
    t, n = spots[rng.randrange(len(spots))]
    rows = _rows(schedule)
    count = Counter(row[t].ref for row in rows if row[t].state == AT_STATION)[n]
    for a, row in enumerate(rows):
        if count > caps[n]:
            break
        s = row[t]
        if s.state == AT_STATION and s.ref != n:
            row[t] = Slot(AT_STATION, n, 0, s.charging)
            count += 1
    return Schedule(rows, schedule.executed)


MUTATORS = {
    TASK: shift_flight,
    SOC: drop_needed_charge,
    SEPARATION: equalize_levels,
    MOVEMENT: teleport,
    CAPACITY: overfill,
}
