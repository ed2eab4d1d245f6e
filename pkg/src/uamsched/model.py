"""Problem instances, schedules, the random instance generator and JSON I/O."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .geometry import CONSERVATIVE, ENDPOINT_POLICIES, Point2, edge_id

FLIGHT = "flight"
LITERAL = "literal"
CONSUMPTION_MODES = (FLIGHT, LITERAL)

AT_STATION = "station"
FLYING = "flying"


class InstanceError(ValueError):
    """Instance parameters that cannot be honoured."""


class InstanceFormatError(ValueError):
    """Malformed or schema-violating instance/schedule document."""


def as_fraction(value) -> Fraction:
    """Exact rational for a decimal-looking number (0.1 -> 1/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class Station:
    id: int
    pos: Point2
    capacity: int = 3


@dataclass(frozen=True)
class Vehicle:
    id: int
    initial_station: int
    soc0: float = 100
    con: float = 5
    hcon: float = 0.1
    ch: float = 10


@dataclass(frozen=True)
class Task:
    id: int
    origin: int
    dest: int
    t_start: int
    duration: int

    @property
    def t_end(self) -> int:
        return self.t_start + self.duration

    @property
    def edge(self):
        return edge_id(self.origin, self.dest)

    def window(self) -> range:
        """Timesteps during which the task is in the air."""
        return range(self.t_start, self.t_end)


@dataclass(frozen=True)
class Instance:
    stations: tuple
    vehicles: tuple
    tasks: tuple
    horizon: int = 30
    max_level: int = 4
    endpoint_policy: str = CONSERVATIVE
    consumption_mode: str = FLIGHT

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "tasks", tuple(self.tasks))

    @property
    def timesteps(self) -> range:
        return range(self.horizon + 1)

    def station(self, sid: int) -> Station:
        return self._lookup("stations")[sid]

    def vehicle(self, vid: int) -> Vehicle:
        return self._lookup("vehicles")[vid]

    def task(self, tid: int) -> Task:
        return self._lookup("tasks")[tid]

    def _lookup(self, attr):
        cache = self.__dict__.setdefault("_index", {})
        if attr not in cache:
            cache[attr] = {x.id: x for x in getattr(self, attr)}
        return cache[attr]

    def conflicts(self):
        """ConflictSets of the station graph under this instance's endpoint policy."""
        cache = self.__dict__.setdefault("_index", {})
        if "conflicts" not in cache:
            from .geometry import conflict_sets
            cache["conflicts"] = conflict_sets([s.pos for s in self.stations],
                                               self.endpoint_policy,
                                               ids=[s.id for s in self.stations])
        return cache["conflicts"]


@dataclass(frozen=True)
class Slot:
    """State of one vehicle at one timestep."""
    state: str          # AT_STATION or FLYING
    ref: int            # station id or task id
    level: int = 0
    charging: bool = False

    @property
    def flying(self) -> bool:
        return self.state == FLYING


@dataclass(frozen=True)
class Schedule:
    """Per-vehicle timelines, aligned with ``instance.vehicles``, plus executed task ids."""
    timeline: tuple
    executed: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "timeline", tuple(tuple(row) for row in self.timeline))
        object.__setattr__(self, "executed", frozenset(self.executed))

    def level_sum(self) -> int:
        return sum(s.level for row in self.timeline for s in row)

    def level_sum_at(self, t: int) -> int:
        return sum(row[t].level for row in self.timeline)


def idle_schedule(instance: Instance) -> Schedule:
    """Every vehicle parked at its initial station for the whole horizon."""
    rows = [[Slot(AT_STATION, v.initial_station)] * (instance.horizon + 1)
            for v in instance.vehicles]
    return Schedule(rows, frozenset())


@dataclass(frozen=True)
class Violation:
    category: str
    subject: Any
    t: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        subject = list(self.subject) if isinstance(self.subject, tuple) else self.subject
        return {"category": self.category, "subject": subject, "t": self.t,
                "detail": self.detail}


@dataclass
class Metrics:
    executed_count: int
    energy_units: float
    level_histogram: tuple
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"executed_count": self.executed_count,
               "energy_units": self.energy_units,
               "level_histogram": list(self.level_histogram),
               "wall_clock": self.wall_clock}
        out.update(self.extra)
        return out


def validate_instance(instance: Instance) -> list:
    """Check the instance invariants; returns a list of Violations (empty when valid)."""
    out = []

    def bad(category, subject, detail):
        out.append(Violation(category, subject, None, detail))

    if instance.horizon < 1:
        bad("horizon", "instance", f"horizon {instance.horizon} < 1")
    if instance.max_level < 1:
        bad("max_level", "instance", f"max_level {instance.max_level} < 1")
    if instance.endpoint_policy not in ENDPOINT_POLICIES:
        bad("endpoint_policy", "instance", repr(instance.endpoint_policy))
    if instance.consumption_mode not in CONSUMPTION_MODES:
        bad("consumption_mode", "instance", repr(instance.consumption_mode))

    for kind in ("stations", "vehicles", "tasks"):
        ids = [x.id for x in getattr(instance, kind)]
        for i, n in Counter(ids).items():
            if n > 1:
                bad("duplicate id", (kind, i), f"{n} {kind} share id {i}")
        for i in ids:
            if not isinstance(i, int) or i < 0:
                bad("id", (kind, i), "ids must be non-negative integers")

    station_ids = {s.id for s in instance.stations}
    if len(instance.stations) < 2:
        bad("stations", "instance", "need at least two stations")
    coords = Counter((s.pos.x, s.pos.y) for s in instance.stations)
    for xy, n in coords.items():
        if n > 1:
            bad("duplicate coordinates", xy, f"{n} stations at {xy}")
    for s in instance.stations:
        if not isinstance(s.capacity, int) or s.capacity < 1:
            bad("capacity", s.id, f"capacity {s.capacity} < 1")

    for v in instance.vehicles:
        if v.initial_station not in station_ids:
            bad("unknown station", v.id, f"initial station {v.initial_station}")
        if not 0 <= v.soc0 <= 100:
            bad("soc0", v.id, f"soc0 {v.soc0} outside [0, 100]")
        if not v.con > 0:
            bad("con", v.id, f"con {v.con} must be > 0")
        if not v.hcon >= 0:
            bad("hcon", v.id, f"hcon {v.hcon} must be >= 0")
        if not v.ch > 0:
            bad("ch", v.id, f"ch {v.ch} must be > 0")

    placed = Counter(v.initial_station for v in instance.vehicles)
    for s in instance.stations:
        if placed[s.id] > s.capacity:
            bad("initial capacity", s.id,
                f"{placed[s.id]} vehicles start at station {s.id} with capacity {s.capacity}")

    for task in instance.tasks:
        if task.origin == task.dest:
            bad("self-loop task", task.id, f"origin == dest == {task.origin}")
        for sid in (task.origin, task.dest):
            if sid not in station_ids:
                bad("unknown station", task.id, f"station {sid}")
        if task.duration < 1:
            bad("duration", task.id, f"duration {task.duration} < 1")
        if task.t_start < 1:
            bad("t_start", task.id, f"t_start {task.t_start} < 1")
        if task.t_end > instance.horizon:
            bad("t_end", task.id, f"t_end {task.t_end} > horizon {instance.horizon}")
    return out


# -- random instances ------------------------------------------------------

_STATION_STREAM, _TASK_STREAM, _VEHICLE_STREAM = 0, 1, 2


def _rng(seed: int, stream: int) -> np.random.Generator:
    # PCG64 seeded through SeedSequence; each entity kind has its own stream so
    # sweeping one size parameter leaves the other entities unchanged
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def generate_instance(seed: int, n_stations: int, n_vehicles: int, n_tasks: int,
                      horizon: int = 30, capacity: int = 3, con: float = 5,
                      hcon: float = 0.1, ch: float = 10, max_level: int = 4,
                      coord_range: tuple = (0, 100),
                      endpoint_policy: str = CONSERVATIVE,
                      consumption_mode: str = FLIGHT, soc0: float = 100) -> Instance:
    """Random instance with uniform station positions, trips and start times.

    Station coordinates are integers drawn uniformly from ``coord_range``
    (inclusive) and resampled on collision.  Task durations are uniform in
    1..4 and start times uniform in 1..horizon-duration.  Vehicles are placed
    uniformly over the stations that still have room.
    """
    if n_stations < 2:
        raise InstanceError("n_stations must be >= 2")
    if horizon < 6:
        raise InstanceError("horizon must be >= 6")
    if n_vehicles > n_stations * capacity:
        raise InstanceError(f"cannot place {n_vehicles} vehicles in {n_stations} "
                            f"stations of capacity {capacity}")
    lo, hi = coord_range
    if (hi - lo + 1) ** 2 < n_stations:
        raise InstanceError("coordinate range too small for distinct stations")

    rng = _rng(seed, _STATION_STREAM)
    seen, stations = set(), []
    while len(stations) < n_stations:
        xy = tuple(int(c) for c in rng.integers(lo, hi + 1, size=2))
        if xy in seen:
            continue
        seen.add(xy)
        stations.append(Station(len(stations), Point2(*xy), capacity))

    rng = _rng(seed, _TASK_STREAM)
    tasks = []
    for k in range(n_tasks):
        origin = int(rng.integers(n_stations))
        dest = int(rng.integers(n_stations - 1))
        if dest >= origin:
            dest += 1
        duration = int(rng.integers(1, 5))
        t_start = int(rng.integers(1, horizon - duration + 1))
        tasks.append(Task(k, origin, dest, t_start, duration))

    rng = _rng(seed, _VEHICLE_STREAM)
    room = [capacity] * n_stations
    vehicles = []
    for k in range(n_vehicles):
        free = [i for i, r in enumerate(room) if r > 0]
        home = free[int(rng.integers(len(free)))]
        room[home] -= 1
        vehicles.append(Vehicle(k, home, soc0, con, hcon, ch))

    return Instance(stations, vehicles, tasks, horizon, max_level,
                    endpoint_policy, consumption_mode)


# -- JSON I/O ----------------------------------------------------------------

_ID = {"type": "integer", "minimum": 0}
_NUM = {"type": "number"}

INSTANCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["horizon", "max_level", "endpoint_policy", "consumption_mode",
                 "stations", "vehicles", "tasks"],
    "properties": {
        "horizon": {"type": "integer", "minimum": 1},
        "max_level": {"type": "integer", "minimum": 1},
        "endpoint_policy": {"enum": list(ENDPOINT_POLICIES)},
        "consumption_mode": {"enum": list(CONSUMPTION_MODES)},
        "stations": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "x", "y", "capacity"],
            "properties": {"id": _ID, "x": _NUM, "y": _NUM,
                           "capacity": {"type": "integer", "minimum": 1}}}},
        "vehicles": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "initial_station", "soc0", "con", "hcon", "ch"],
            "properties": {"id": _ID, "initial_station": _ID,
                           "soc0": {"type": "number", "minimum": 0, "maximum": 100},
                           "con": {"type": "number", "exclusiveMinimum": 0},
                           "hcon": {"type": "number", "minimum": 0},
                           "ch": {"type": "number", "exclusiveMinimum": 0}}}},
        "tasks": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["id", "origin", "dest", "t_start", "duration"],
            "properties": {"id": _ID, "origin": _ID, "dest": _ID,
                           "t_start": {"type": "integer", "minimum": 1},
                           "duration": {"type": "integer", "minimum": 1}}}},
    },
}

SCHEDULE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["executed", "timeline"],
    "properties": {
        "executed": {"type": "array", "items": _ID},
        "timeline": {"type": "array", "items": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["state", "station_or_task", "level", "charging"],
            "properties": {"state": {"enum": [AT_STATION, FLYING]},
                           "station_or_task": _ID,
                           "level": {"type": "integer", "minimum": 0},
                           "charging": {"type": "boolean"}}}}},
    },
}


def _load(path, schema, what):
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: malformed {what} JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceFormatError(f"{path}: invalid {what} at {where}: {exc.message}") from exc
    return doc


def _dump(doc, path):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def instance_to_json(instance: Instance) -> dict:
    return {
        "horizon": instance.horizon,
        "max_level": instance.max_level,
        "endpoint_policy": instance.endpoint_policy,
        "consumption_mode": instance.consumption_mode,
        "stations": [{"id": s.id, "x": s.pos.x, "y": s.pos.y, "capacity": s.capacity}
                     for s in instance.stations],
        "vehicles": [{"id": v.id, "initial_station": v.initial_station, "soc0": v.soc0,
                      "con": v.con, "hcon": v.hcon, "ch": v.ch} for v in instance.vehicles],
        "tasks": [{"id": t.id, "origin": t.origin, "dest": t.dest, "t_start": t.t_start,
                   "duration": t.duration} for t in instance.tasks],
    }


def instance_from_json(doc: dict) -> Instance:
    return Instance(
        stations=[Station(s["id"], Point2(s["x"], s["y"]), s["capacity"]) for s in doc["stations"]],
        vehicles=[Vehicle(v["id"], v["initial_station"], v["soc0"], v["con"], v["hcon"], v["ch"])
                  for v in doc["vehicles"]],
        tasks=[Task(t["id"], t["origin"], t["dest"], t["t_start"], t["duration"])
               for t in doc["tasks"]],
        horizon=doc["horizon"], max_level=doc["max_level"],
        endpoint_policy=doc["endpoint_policy"], consumption_mode=doc["consumption_mode"])


def write_instance(instance: Instance, path) -> None:
    _dump(instance_to_json(instance), path)


def read_instance(path) -> Instance:
    return instance_from_json(_load(path, INSTANCE_SCHEMA, "instance"))


def schedule_to_json(schedule: Schedule) -> dict:
    return {
        "executed": sorted(schedule.executed),
        "timeline": [[{"state": s.state, "station_or_task": s.ref, "level": s.level,
                       "charging": s.charging} for s in row] for row in schedule.timeline],
    }


def schedule_from_json(doc: dict) -> Schedule:
    rows = [[Slot(s["state"], s["station_or_task"], s["level"], s["charging"]) for s in row]
            for row in doc["timeline"]]
    return Schedule(rows, frozenset(doc["executed"]))


def write_schedule(schedule: Schedule, path) -> None:
    _dump(schedule_to_json(schedule), path)


def read_schedule(path) -> Schedule:
    return schedule_from_json(_load(path, SCHEDULE_SCHEMA, "schedule"))


def restrict(instance: Instance, vehicles=None, tasks=None) -> Instance:
    """Copy of ``instance`` keeping only the given vehicles and/or tasks."""
    from dataclasses import replace
    kw = {}
    if vehicles is not None:
        kw["vehicles"] = tuple(vehicles)
    if tasks is not None:
        kw["tasks"] = tuple(tasks)
    return replace(instance, **kw)

