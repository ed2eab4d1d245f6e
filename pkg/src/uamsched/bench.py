"""Experiment sweeps comparing the monolithic and the incremental scheduler.

Every (sweep, x, replication) cell builds one seeded instance, runs each
algorithm on it and yields one CSV row per algorithm.  Failures become rows
with a non-``ok`` status instead of aborting the sweep.

CSV columns: ``sweep, x, algo, seed, executed, energy, level0..levelU,
seconds, status``.  ``seconds`` is wall-clock time; every other column is a
pure function of the seed, the sweep settings and the backend.
"""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .incremental import LAZY, solve_incremental
from .milp import BackendConfig, BackendError
from .model import CONSERVATIVE, FLIGHT, generate_instance
from .optimal import OptimalConfig, SchedulingError, SolveTimeout, solve_optimal
from .validator import validate_schedule

log = logging.getLogger(__name__)

OPTIMAL, INCR = "optimal", "incr"
OK, TIMEOUT, ERROR, INVALID = "ok", "timeout", "error", "invalid"


@dataclass
class BenchConfig:
    reps: int = 5
    seed: int = 0
    n_stations: int = 8
    n_vehicles: int = 5
    n_tasks: int = 50
    horizon: int = 30
    capacity: int = 3
    max_level: int = 4
    task_range: tuple = (10, 20, 30, 40, 50, 60)
    vehicle_range: tuple = (2, 3, 4, 5, 6, 7, 8)
    station_range: tuple = (4, 5, 6, 7, 8, 9, 10, 11, 12)
    # large incremental-only setting; capacity must hold the whole fleet at t=0
    large_vehicles: tuple = (100,)
    large_tasks: int = 200
    large_stations: int = 8
    large_capacity: int = 15
    large_reps: int = 1
    time_limit: float = 600.0
    backend: BackendConfig | None = None
    formulation: str = "tight"
    order: object = None
    ignore_occupancy: bool = False
    reserve: str = LAZY
    endpoint_policy: str = CONSERVATIVE
    consumption_mode: str = FLIGHT
    workers: int = 1
    algos: tuple = (OPTIMAL, INCR)
    sweeps: tuple | None = None      # None: every sweep of the experiment

    def optimal_config(self) -> OptimalConfig:
        return OptimalConfig(time_limit=self.time_limit, backend=self.backend,
                             formulation=self.formulation)


@dataclass(frozen=True)
class Cell:
    sweep: str
    x: int
    seed: int
    n_stations: int
    n_vehicles: int
    n_tasks: int
    capacity: int
    algos: tuple = field(default=(OPTIMAL, INCR))


def columns(max_level: int) -> list:
    return (["sweep", "x", "algo", "seed", "executed", "energy"]
            + [f"level{i}" for i in range(max_level + 1)] + ["seconds", "status"])


def _sweep_cells(cfg: BenchConfig, sweep: str) -> list:
    cells = []
    base = dict(n_stations=cfg.n_stations, n_vehicles=cfg.n_vehicles, n_tasks=cfg.n_tasks,
                capacity=cfg.capacity, algos=tuple(cfg.algos))
    if sweep == "tasks":
        axis, key = cfg.task_range, "n_tasks"
    elif sweep == "vehicles":
        axis, key = cfg.vehicle_range, "n_vehicles"
    elif sweep == "stations":
        axis, key = cfg.station_range, "n_stations"
    elif sweep == "large":
        axis, key = cfg.large_vehicles, "n_vehicles"
        base.update(n_stations=cfg.large_stations, n_tasks=cfg.large_tasks,
                    capacity=cfg.large_capacity,
                    algos=tuple(a for a in cfg.algos if a == INCR) or (INCR,))
    else:
        raise ValueError(f"unknown sweep {sweep!r}")
    reps = cfg.large_reps if sweep == "large" else cfg.reps
    for x in axis:
        for r in range(reps):
            cells.append(Cell(sweep, int(x), cfg.seed + r, **{**base, key: int(x)}))
    return cells


EXPERIMENTS = {"exp1": ("tasks", "vehicles", "stations"),
               "exp2": ("tasks", "vehicles", "stations", "large")}


def cells_for(cfg: BenchConfig, experiment: str) -> list:
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    sweeps = cfg.sweeps or EXPERIMENTS[experiment]
    return [c for s in sweeps for c in _sweep_cells(cfg, s)]


def _row(cfg, cell, algo, metrics=None, seconds=0.0, status=OK) -> dict:
    row = {"sweep": cell.sweep, "x": cell.x, "algo": algo, "seed": cell.seed,
           "executed": "", "energy": "", "seconds": f"{seconds:.3f}", "status": status}
    for i in range(cfg.max_level + 1):
        row[f"level{i}"] = ""
    if metrics is not None:
        row["executed"] = metrics.executed_count
        row["energy"] = f"{metrics.energy_units:.6g}"
        for i, n in enumerate(metrics.level_histogram):
            row[f"level{i}"] = n
    return row


def run_cell(cfg: BenchConfig, cell: Cell) -> list:
    inst = generate_instance(cell.seed, cell.n_stations, cell.n_vehicles, cell.n_tasks,
                             horizon=cfg.horizon, capacity=cell.capacity,
                             max_level=cfg.max_level, endpoint_policy=cfg.endpoint_policy,
                             consumption_mode=cfg.consumption_mode)
    rows = []
    for algo in cell.algos:
        start = time.perf_counter()
        try:
            if algo == OPTIMAL:
                sched, metrics = solve_optimal(inst, cfg.optimal_config())
            else:
                sched, metrics = solve_incremental(inst, cfg.optimal_config(), cfg.order,
                                                   cfg.ignore_occupancy, cfg.reserve)
        except SolveTimeout:
            rows.append(_row(cfg, cell, algo, None, time.perf_counter() - start, TIMEOUT))
            continue
        except (SchedulingError, BackendError) as exc:
            log.warning("%s %s x=%s seed=%s failed: %s", cell.sweep, algo, cell.x,
                        cell.seed, exc)
            rows.append(_row(cfg, cell, algo, None, time.perf_counter() - start, ERROR))
            continue
        seconds = time.perf_counter() - start
        status = INVALID if validate_schedule(inst, sched) else OK
        rows.append(_row(cfg, cell, algo, metrics, seconds, status))
    return rows


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(cfg: BenchConfig, experiment: str, progress=None) -> list:
    """All CSV rows of ``experiment`` ("exp1" or "exp2"), in cell order."""
    cells = cells_for(cfg, experiment)
    out = []
    if cfg.workers <= 1:
        for i, cell in enumerate(cells):
            out.extend(run_cell(cfg, cell))
            if progress:
                progress(i + 1, len(cells), cell)
        return out
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        # map keeps cell order, so the CSV does not depend on scheduling
        for i, (cell, rows) in enumerate(zip(cells, pool.map(
                _run_cell_args, [(cfg, c) for c in cells]))):
            out.extend(rows)
            if progress:
                progress(i + 1, len(cells), cell)
    return out


def write_csv(rows, path, max_level: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns(max_level))
        w.writeheader()
        w.writerows(rows)


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cell_means(rows, sweep: str, algo: str, column: str) -> dict:
    """Mean of ``column`` per x over the ``ok`` rows of one sweep and algorithm."""
    acc = {}
    for r in rows:
        if r["sweep"] == sweep and r["algo"] == algo and r["status"] == OK:
            acc.setdefault(int(r["x"]), []).append(float(r[column]))
    return {x: sum(v) / len(v) for x, v in sorted(acc.items())}


def with_overrides(cfg: BenchConfig, **kw) -> BenchConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
