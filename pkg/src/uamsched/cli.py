"""Command-line front end: ``uamsched {gen,solve,validate,conflicts,bench} ...``.

Exit codes: 0 success, 1 violations found or a solve failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .geometry import ENDPOINT_POLICIES
from .milp import BackendError, default_backend
from .model import (CONSUMPTION_MODES, InstanceError, InstanceFormatError, generate_instance,
                    read_instance, read_schedule, write_instance, write_schedule)
from .incremental import ALL, LAZY
from .optimal import LITERAL, TIGHT, OptimalConfig, SchedulingError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _order(text):
    if text is None or text == "input" or text.startswith("seed:"):
        return text
    if text == "seed":
        return "seed:0"
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            "expected 'input', 'seed', 'seed:N' or comma-separated vehicle ids") from None


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=0, help="generator / bench base seed")
    g.add_argument("--backend-cmd", help="solver command template with {lp} {sol} "
                   "{time_limit} placeholders, or 'highs' / 'cbc'")
    g.add_argument("--backend-dialect", default="generic", choices=("generic", "cbc", "glpk"),
                   help="solution file format of a custom --backend-cmd")
    g.add_argument("--time-limit", type=float, default=600.0, help="seconds per solve")
    g.add_argument("--order", type=_order, default=None,
                   help="incremental vehicle order: input, seed[:N] or ids like 2,0,1")
    g.add_argument("--endpoint-policy", choices=ENDPOINT_POLICIES, default=None)
    g.add_argument("--consumption-mode", choices=CONSUMPTION_MODES, default=None)
    g.add_argument("--formulation", choices=(TIGHT, LITERAL), default=TIGHT)
    g.add_argument("--ignore-occupancy", action="store_true",
                   help="incremental: ignore station slots used by earlier vehicles")
    g.add_argument("--reserve", choices=(LAZY, ALL), default=LAZY,
                   help="incremental: hold home stations of unscheduled vehicles only "
                        "after one is blocked (lazy) or always (all)")
    g.add_argument("--keep-artifacts", action="store_true",
                   help="keep LP and solution files under OUT_DIR/artifacts")
    g.add_argument("--out-dir", type=Path, default=Path("."))
    g.add_argument("-v", "--verbose", action="count", default=0)
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    p = argparse.ArgumentParser(prog="uamsched", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="write a random instance")
    gen.add_argument("--stations", type=int, default=8)
    gen.add_argument("--vehicles", type=int, default=5)
    gen.add_argument("--tasks", type=int, default=30)
    gen.add_argument("--horizon", type=int, default=30)
    gen.add_argument("--capacity", type=int, default=3)
    gen.add_argument("--max-level", type=int, default=4)
    gen.add_argument("-o", "--output", type=Path, help="default OUT_DIR/instance_SEED.json")

    solve = sub.add_parser("solve", parents=[common], help="schedule an instance file")
    solve.add_argument("instance", type=Path)
    solve.add_argument("--algo", choices=("optimal", "incr", "oracle"), default="optimal")
    solve.add_argument("-o", "--output", type=Path,
                       help="schedule file, default OUT_DIR/STEM.ALGO.schedule.json")

    val = sub.add_parser("validate", parents=[common], help="check a schedule file")
    val.add_argument("instance", type=Path)
    val.add_argument("schedule", type=Path)

    conf = sub.add_parser("conflicts", parents=[common], help="print the conflict sets")
    conf.add_argument("instance", type=Path)

    bench = sub.add_parser("bench", parents=[common], help="run an experiment sweep")
    bench.add_argument("experiment", choices=("exp1", "exp2"))
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--sweeps", type=lambda s: tuple(s.split(",")),
                       help="subset of tasks,vehicles,stations,large")
    bench.add_argument("--task-range", type=_int_list)
    bench.add_argument("--vehicle-range", type=_int_list)
    bench.add_argument("--station-range", type=_int_list)
    bench.add_argument("--large-vehicles", type=_int_list)
    bench.add_argument("--large-tasks", type=int)
    bench.add_argument("--no-plots", action="store_true", help="write the CSV only")
    return p


def _backend(args):
    keep = args.out_dir / "artifacts" if args.keep_artifacts else None
    if keep:
        keep.mkdir(parents=True, exist_ok=True)
    return default_backend(args.time_limit, args.backend_cmd, args.backend_dialect, keep)


def _config(args) -> OptimalConfig:
    return OptimalConfig(time_limit=args.time_limit, backend=_backend(args),
                         formulation=args.formulation)


def _load_instance(args):
    inst = read_instance(args.instance)
    kw = {}
    if args.endpoint_policy:
        kw["endpoint_policy"] = args.endpoint_policy
    if args.consumption_mode:
        kw["consumption_mode"] = args.consumption_mode
    return replace(inst, **kw) if kw else inst


def _emit(doc):
    print(json.dumps(doc, indent=1, default=str))


def cmd_gen(args):
    inst = generate_instance(args.seed, args.stations, args.vehicles, args.tasks,
                             horizon=args.horizon, capacity=args.capacity,
                             max_level=args.max_level,
                             **{k: v for k, v in (("endpoint_policy", args.endpoint_policy),
                                                  ("consumption_mode", args.consumption_mode))
                                if v})
    out = args.output or args.out_dir / f"instance_{args.seed}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_instance(inst, out)
    print(out)
    return EXIT_OK


def cmd_solve(args):
    from .incremental import solve_incremental
    from .optimal import solve_optimal
    from .oracle import solve_exact
    inst = _load_instance(args)
    if args.algo == "optimal":
        sched, metrics = solve_optimal(inst, _config(args))
    elif args.algo == "incr":
        sched, metrics = solve_incremental(inst, _config(args), args.order,
                                           args.ignore_occupancy, args.reserve)
    else:
        sched, metrics = solve_exact(inst)
    out = args.output or args.out_dir / f"{args.instance.stem}.{args.algo}.schedule.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_schedule(sched, out)
    doc = metrics.to_json()
    doc["schedule"] = str(out)
    _emit(doc)
    return EXIT_OK


def cmd_validate(args):
    from .validator import validate_schedule, violations_to_json
    inst = _load_instance(args)
    problems = validate_schedule(inst, read_schedule(args.schedule))
    _emit(violations_to_json(problems))
    return EXIT_FAIL if problems else EXIT_OK


def cmd_conflicts(args):
    _emit(_load_instance(args).conflicts().to_json())
    return EXIT_OK


def cmd_bench(args):
    from . import bench
    cfg = bench.BenchConfig(
        reps=args.reps, seed=args.seed, time_limit=args.time_limit, backend=_backend(args),
        formulation=args.formulation, order=args.order, ignore_occupancy=args.ignore_occupancy,
        reserve=args.reserve,
        workers=args.workers, sweeps=args.sweeps)
    cfg = bench.with_overrides(
        cfg, task_range=args.task_range, vehicle_range=args.vehicle_range,
        station_range=args.station_range, large_vehicles=args.large_vehicles,
        large_tasks=args.large_tasks, endpoint_policy=args.endpoint_policy,
        consumption_mode=args.consumption_mode)
    for s in cfg.sweeps or ():
        if s not in bench.EXPERIMENTS[args.experiment]:
            raise UsageError(f"sweep {s!r} is not part of {args.experiment}")

    def progress(done, total, cell):
        print(f"[{done}/{total}] {cell.sweep} x={cell.x} seed={cell.seed}", file=sys.stderr)

    rows = bench.run_experiment(cfg, args.experiment, progress)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = args.out_dir / f"{args.experiment}.csv"
    bench.write_csv(rows, csv_path, cfg.max_level)
    print(csv_path)
    if not args.no_plots:
        from .plotting import render
        for path in render(rows, args.out_dir, args.experiment, cfg.max_level):
            print(path)
    bad = [r for r in rows if r["status"] != bench.OK]
    if bad:
        print(f"{len(bad)} of {len(rows)} rows did not finish cleanly", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "validate": cmd_validate,
            "conflicts": cmd_conflicts, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"uamsched: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceFormatError, InstanceError, UsageError, ValueError) as exc:
        print(f"uamsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchedulingError, BackendError) as exc:
        print(f"uamsched: solve failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
