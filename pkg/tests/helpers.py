"""Shared builders for the test suite."""
from __future__ import annotations

import random

from uamsched.geometry import Point2
from uamsched.model import Instance, Station, Task, Vehicle, generate_instance


def make_instance(stations, vehicles, tasks, horizon=8, max_level=4, capacity=3,
                  policy="conservative", mode="flight", **vehicle_kw):
    """Instance from coordinates, vehicle home stations and (origin, dest, start, duration)."""
    return Instance(
        stations=[Station(i, Point2(*xy), capacity) for i, xy in enumerate(stations)],
        vehicles=[Vehicle(i, home, **vehicle_kw) for i, home in enumerate(vehicles)],
        tasks=[Task(i, *spec) for i, spec in enumerate(tasks)],
        horizon=horizon, max_level=max_level, endpoint_policy=policy, consumption_mode=mode)


def tiny_instance(seed: int) -> Instance:
    """One member of the tiny corpus: 2-3 vehicles, 3-6 tasks, 3-4 stations, T <= 10."""
    r = random.Random(seed)
    return generate_instance(seed, r.randint(3, 4), r.randint(2, 3), r.randint(3, 6),
                             horizon=r.randint(6, 10), max_level=3, capacity=r.randint(1, 2))


def medium_instance(seed: int) -> Instance:
    """5 vehicles, 30-60 tasks, 8 stations, 30 usable timesteps."""
    n_tasks = random.Random(10_000 + seed).choice((30, 40, 50, 60))
    return generate_instance(seed, 8, 5, n_tasks, horizon=30)


# corners of a 10 x 10 square; edges 0-1 and 2-3 are its crossing diagonals
SQUARE = [(0, 0), (10, 10), (0, 10), (10, 0)]


def crossing_instance(**kw) -> Instance:
    """Two vehicles and two fully overlapping flights along crossing diagonals."""
    return make_instance(SQUARE, [0, 2], [(0, 1, 2, 3), (2, 3, 2, 3)], horizon=7, **kw)


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def report(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
