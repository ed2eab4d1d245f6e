"""Monolithic integer program assigning every vehicle at once.

Decision variables per instance:

    lam_k          task k is executed
    eps_a_k_t      vehicle a flies task k at t (only inside the task's window)
    om_a_t_n       vehicle a is parked at station n at t
    h_a_t          flight level of vehicle a at t (0 on the ground)
    phi_a_t        vehicle a charges at t

Time runs over 0..horizon; t = 0 is the fixed initial state.
"""
from __future__ import annotations

import itertools
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from . import milp
from .milp import EQ, GE, INTEGER, LE, LinExpr, lsum
from .model import (AT_STATION, FLIGHT, FLYING, Instance, Schedule, Slot, as_fraction,
                    validate_instance)

log = logging.getLogger(__name__)

# LITERAL: pairwise big-M separation exactly as formulated.
# TIGHT: same feasible schedules, plus flow-balance rows, and separation
# expressed through per-task level indicators with clique rows instead of the
# pairwise big-M disjunctions (those are implied and only slow the search).
LITERAL, TIGHT = "literal", "tight"


class SchedulingError(RuntimeError):
    """Base class for solve failures."""


class SolveTimeout(SchedulingError):
    """The backend hit its wall-clock limit; no schedule is available."""

    def __init__(self, msg, outcome=None):
        super().__init__(msg)
        self.outcome = outcome


class ModelBugError(SchedulingError):
    """The backend reported an infeasible model, which valid instances never produce."""


@dataclass
class VariableIndex:
    lam: dict = field(default_factory=dict)     # task -> name
    eps: dict = field(default_factory=dict)     # (vehicle, task, t) -> name
    om: dict = field(default_factory=dict)      # (vehicle, t, station) -> name
    h: dict = field(default_factory=dict)       # (vehicle, t) -> name
    phi: dict = field(default_factory=dict)     # (vehicle, t) -> name
    delta: dict = field(default_factory=dict)   # (vehicle, t, station) -> name
    separation: list = field(default_factory=list)
    task_level: dict = field(default_factory=dict)  # (task, t) -> [indicator per level]


@dataclass
class OptimalConfig:
    mu: Fraction | None = None          # None: mu_for(instance)
    time_limit: float = 600.0
    backend: milp.BackendConfig | None = None
    formulation: str = TIGHT

    def backend_config(self) -> milp.BackendConfig:
        b = self.backend or milp.default_backend(self.time_limit)
        if b.time_limit != self.time_limit and self.backend is None:
            b.time_limit = self.time_limit
        return b


def mu_for(instance: Instance) -> Fraction:
    """Altitude weight small enough that the level sum never outweighs one task."""
    n = len(instance.vehicles) * (instance.horizon + 1) * instance.max_level
    return Fraction(1, n + 1)


def _check(instance):
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(
            f"{v.category} ({v.subject}): {v.detail}" for v in problems))


def build_model(instance: Instance, conflict_sets=None, config: OptimalConfig | None = None,
                committed=None, occupancy=None):
    """Integer program for ``instance``; returns ``(LinearModel, VariableIndex)``.

    ``committed`` holds flight levels already fixed for other vehicles as
    ``{(vehicle, t): (level, edge)}``; each remaining task whose edge conflicts
    with a committed flight must then keep a level different from it.
    ``occupancy`` maps ``(t, station)`` to slots already taken by other
    vehicles and tightens the station capacities accordingly.
    """
    _check(instance)
    config = config or OptimalConfig()
    conflicts = conflict_sets if conflict_sets is not None else instance.conflicts()
    mu = config.mu if config.mu is not None else mu_for(instance)
    T = instance.horizon
    times = range(T + 1)
    up = instance.max_level
    stations = [s.id for s in instance.stations]
    m = milp.LinearModel("uam")
    ix = VariableIndex()

    for task in instance.tasks:
        ix.lam[task.id] = m.add_var(f"lam_{task.id}")
    for v in instance.vehicles:
        a = v.id
        for t in times:
            for n in stations:
                ix.om[a, t, n] = m.add_var(f"om_{a}_{t}_{n}")
            ix.h[a, t] = m.add_var(f"h_{a}_{t}", INTEGER, 0, up)
            ix.phi[a, t] = m.add_var(f"phi_{a}_{t}")
        for task in instance.tasks:
            for t in task.window():
                ix.eps[a, task.id, t] = m.add_var(f"eps_{a}_{task.id}_{t}")

    # flying indicators per (vehicle, t)
    flying = defaultdict(list)
    for (a, k, t), name in ix.eps.items():
        flying[a, t].append(name)

    m.set_objective(lsum(ix.lam.values()) - mu * lsum(ix.h.values()))

    for task in instance.tasks:
        k = task.id
        m.add_constraint(f"dur_{k}", lsum(ix.eps[a.id, k, t] for a in instance.vehicles
                                          for t in task.window())
                         - task.duration * LinExpr.of(ix.lam[k]), EQ, 0)
        for v in instance.vehicles:
            a = v.id
            for t in range(task.t_start, task.t_end - 1):
                m.add_constraint(f"cont_{a}_{k}_{t}",
                                 LinExpr({ix.eps[a, k, t + 1]: 1, ix.eps[a, k, t]: -1}), EQ, 0)
            first, last = ix.eps[a, k, task.t_start], ix.eps[a, k, task.t_end - 1]
            m.add_constraint(f"orig_{a}_{k}",
                             LinExpr({ix.om[a, task.t_start - 1, task.origin]: 1, first: -1}),
                             GE, 0)
            m.add_constraint(f"dest_{a}_{k}",
                             LinExpr({ix.om[a, task.t_end, task.dest]: 1, last: -1}), GE, 0)

    for v in instance.vehicles:
        a = v.id
        con, hcon, ch = as_fraction(v.con), as_fraction(v.hcon), as_fraction(v.ch)
        soc0 = as_fraction(v.soc0)
        balance = LinExpr()
        for t in times:
            parked = lsum(ix.om[a, t, n] for n in stations)
            fly = lsum(flying[a, t])
            m.add_constraint(f"charge_{a}_{t}", LinExpr.of(ix.phi[a, t]) - parked, LE, 0)
            m.add_constraint(f"place_{a}_{t}", parked + fly, EQ, 1)
            m.add_constraint(f"hlo_{a}_{t}", LinExpr.of(ix.h[a, t]) + parked, GE, 1)
            m.add_constraint(f"hhi_{a}_{t}", LinExpr.of(ix.h[a, t]) - up * fly, LE, 0)
            if instance.consumption_mode == FLIGHT:
                cost = con * fly + hcon * LinExpr.of(ix.h[a, t])
            else:
                cost = con * (1 - fly) + hcon * LinExpr.of(ix.h[a, t])
            balance = balance + ch * LinExpr.of(ix.phi[a, t]) - cost
            m.add_constraint(f"soclo_{a}_{t}", balance, GE, -soc0)
            m.add_constraint(f"sochi_{a}_{t}", balance, LE, 100 - soc0)

        for n in stations:
            m.add_constraint(f"init_{a}_{n}", LinExpr.of(ix.om[a, 0, n]), EQ,
                             int(n == v.initial_station))

        deltas = []
        for t in range(T):
            for n in stations:
                d = milp.add_abs_value_var(m, ix.om[a, t, n], ix.om[a, t + 1, n],
                                           name=f"dl_{a}_{t}_{n}")
                ix.delta[a, t, n] = d
                deltas.append(d)
        starts = [ix.eps[a, task.id, task.t_start] for task in instance.tasks]
        m.add_constraint(f"route_{a}", lsum(deltas) - 2 * lsum(starts), EQ, 0)
        if config.formulation == TIGHT:
            _add_flow_balance(m, ix, instance, a, stations)

    occupancy = occupancy or {}
    for t in times:
        for s in instance.stations:
            cap = s.capacity - occupancy.get((t, s.id), 0)
            m.add_constraint(f"cap_{t}_{s.id}",
                             lsum(ix.om[v.id, t, s.id] for v in instance.vehicles), LE, cap)

    if config.formulation == LITERAL:
        _add_separation(m, ix, instance, conflicts, up)
        if committed:
            _add_committed_separation(m, ix, instance, conflicts, up, committed)
    elif config.formulation == TIGHT:
        _add_task_levels(m, ix, instance, conflicts, up, committed or {})
    else:
        raise ValueError(f"unknown formulation {config.formulation!r}")
    return m, ix


def _add_flow_balance(m, ix, instance, a, stations):
    # Valid for every integer solution (a vehicle only changes station by flying
    # a task), but much tighter in the LP relaxation than the routing budget.
    departs, arrives = defaultdict(list), defaultdict(list)
    for task in instance.tasks:
        departs[task.t_start, task.origin].append(ix.eps[a, task.id, task.t_start])
        arrives[task.t_end, task.dest].append(ix.eps[a, task.id, task.t_end - 1])
    for t in range(1, instance.horizon + 1):
        for n in stations:
            expr = (LinExpr({ix.om[a, t, n]: 1, ix.om[a, t - 1, n]: -1})
                    + lsum(departs[t, n]) - lsum(arrives[t, n]))
            m.add_constraint(f"flow_{a}_{t}_{n}", expr, EQ, 0)


def _add_task_levels(m, ix, instance, conflicts, up, committed):
    # Level of each task at each step as one-hot indicators, with one row per
    # level and maximal clique of mutually conflicting concurrent tasks.  For
    # integer points this restates the pairwise separation; in the relaxation
    # a clique of k flown tasks then already costs 1 + 2 + ... + k.
    import networkx as nx

    levels = range(1, up + 1)
    task_level = {}
    for task in instance.tasks:
        k = task.id
        for t in task.window():
            ind = [m.add_var(f"lv_{k}_{t}_{l}") for l in levels]
            ix.task_level[k, t] = ind
            m.add_constraint(f"lvsum_{k}_{t}", lsum(ind) - LinExpr.of(ix.lam[k]), EQ, 0)
            task_level[k, t] = lsum(l * LinExpr.of(x) for l, x in zip(levels, ind))

    for t in range(1, instance.horizon + 1):
        active = [task for task in instance.tasks if t in task.window()]
        if not active:
            continue
        g = nx.Graph()
        g.add_nodes_from(task.id for task in active)
        for i, p in enumerate(active):
            for q in active[i + 1:]:
                if conflicts.conflicts(p.edge, q.edge):
                    g.add_edge(p.id, q.id)
        for c, clique in enumerate(sorted(sorted(cl) for cl in nx.find_cliques(g))):
            if len(clique) < 2:
                continue
            for l in levels:
                m.add_constraint(f"clq_{t}_{c}_{l}",
                                 lsum(ix.task_level[k, t][l - 1] for k in clique), LE, 1)
        # total altitude at t equals the sum over flown tasks
        m.add_constraint(f"hsum_{t}", lsum(ix.h[v.id, t] for v in instance.vehicles)
                         - lsum(task_level[task.id, t] for task in active), EQ, 0)

    for (a, k, t), e in ix.eps.items():
        lvl = task_level[k, t]
        m.add_constraint(f"hup_{a}_{k}_{t}", LinExpr.of(ix.h[a, t]) - lvl + up * LinExpr.of(e),
                         LE, up)
        m.add_constraint(f"hdn_{a}_{k}_{t}", LinExpr.of(ix.h[a, t]) - lvl - up * LinExpr.of(e),
                         GE, -up)

    for (other, t), (level, edge) in sorted(committed.items()):
        for task in instance.tasks:
            if t in task.window() and conflicts.conflicts(task.edge, edge):
                m.add_constraint(f"lvfix_{task.id}_{other}_{t}",
                                 LinExpr.of(ix.task_level[task.id, t][level - 1]), EQ, 0)


def conflicting_task_pairs(instance: Instance, conflicts) -> list:
    """Unordered task pairs on conflicting edges with overlapping windows, with the overlap."""
    out = []
    for p, q in itertools.combinations(instance.tasks, 2):
        lo, hi = max(p.t_start, q.t_start), min(p.t_end, q.t_end)
        if lo < hi and conflicts.conflicts(p.edge, q.edge):
            out.append((p, q, range(lo, hi)))
    return out


def _add_separation(m, ix, instance, conflicts, up):
    vehicles = [v.id for v in instance.vehicles]
    for p, q, overlap in conflicting_task_pairs(instance, conflicts):
        for t in overlap:
            for a, b in itertools.permutations(vehicles, 2):
                thr = LinExpr({ix.eps[a, p.id, t]: 1, ix.eps[b, q.id, t]: 1}, -1)
                z = milp.add_abs_diff_lower_bound(
                    m, ix.h[a, t], ix.h[b, t], thr, up,
                    name=f"sep_{p.id}_{q.id}_{a}_{b}_{t}")
                ix.separation.append(z)


def _add_committed_separation(m, ix, instance, conflicts, up, committed):
    for v in instance.vehicles:
        a = v.id
        for (other, t), (level, edge) in sorted(committed.items()):
            for task in instance.tasks:
                if t not in task.window() or not conflicts.conflicts(task.edge, edge):
                    continue
                z = milp.add_abs_diff_lower_bound(
                    m, ix.h[a, t], level, LinExpr.of(ix.eps[a, task.id, t]), up,
                    name=f"fix_{task.id}_{a}_{other}_{t}")
                ix.separation.append(z)


def decode(instance: Instance, ix: VariableIndex, values: dict) -> Schedule:
    """Turn a solver assignment into a Schedule."""
    rows = []
    for v in instance.vehicles:
        a = v.id
        row = []
        for t in instance.timesteps:
            level = values[ix.h[a, t]]
            charging = bool(values[ix.phi[a, t]])
            where = [n for n in (s.id for s in instance.stations) if values[ix.om[a, t, n]]]
            flying = [task.id for task in instance.tasks
                      if (a, task.id, t) in ix.eps and values[ix.eps[a, task.id, t]]]
            if flying:
                row.append(Slot(FLYING, flying[0], level, charging))
            else:
                row.append(Slot(AT_STATION, where[0] if where else -1, level, charging))
        rows.append(row)
    executed = frozenset(k for k, name in ix.lam.items() if values[name])
    return Schedule(rows, executed)


def run_model(model, ix, instance, config, tag="optimal"):
    outcome = milp.solve(model, config.backend_config(), tag=tag)
    if outcome.status == milp.TIMEOUT:
        raise SolveTimeout(f"{tag}: time limit reached", outcome)
    if outcome.status == milp.INFEASIBLE:
        raise ModelBugError(f"{tag}: backend reports an infeasible model; "
                            "the all-idle schedule should always be feasible")
    if outcome.status != milp.OPTIMAL:
        raise milp.BackendError(f"{tag}: {outcome.status}: {outcome.output[-2000:]}")
    return decode(instance, ix, outcome.values), outcome


def solve_optimal(instance: Instance, config: OptimalConfig | None = None):
    """Solve the monolithic program; returns ``(Schedule, Metrics)``.

    Raises SolveTimeout when the backend runs out of time.
    """
    from .validator import compute_metrics
    config = config or OptimalConfig()
    start = time.perf_counter()
    model, ix = build_model(instance, None, config)
    log.info("optimal model: %s", model)
    schedule, outcome = run_model(model, ix, instance, config)
    metrics = compute_metrics(instance, schedule)
    metrics.wall_clock = time.perf_counter() - start
    metrics.extra["objective"] = float(outcome.objective)
    return schedule, metrics
