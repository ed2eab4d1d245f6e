"""External MILP solver processes driven through LP and solution files."""
from __future__ import annotations

import logging
import os
import re
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .linear import LinearModel
from .lpformat import write_lp

log = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, TIMEOUT, BACKEND_ERROR = "optimal", "infeasible", "timeout", "backend_error"
DIALECTS = ("generic", "cbc", "glpk")

BACKEND_ENV = "UAMSCHED_BACKEND_CMD"
INTEGRALITY_TOL = 1e-6
# extra wall-clock allowed beyond the solver's own limit before the process is killed
GRACE_SECONDS = 30.0


class BackendError(RuntimeError):
    """The solver process failed or produced output that cannot be read."""


@dataclass
class BackendConfig:
    """Command template with ``{lp}`` and ``{sol}`` (and optionally ``{time_limit}``)."""
    command: str
    dialect: str = "generic"
    time_limit: float = 600.0
    keep_dir: str | None = None

    def __post_init__(self):
        if self.dialect not in DIALECTS:
            raise ValueError(f"unknown solution dialect {self.dialect!r}")
        if "{lp}" not in self.command or "{sol}" not in self.command:
            raise ValueError("backend command needs {lp} and {sol} placeholders")


@dataclass
class SolveOutcome:
    status: str
    values: dict
    objective: Fraction | None
    solver_seconds: float
    output: str = ""
    lp_path: str | None = None
    sol_path: str | None = None


def highs_command() -> str:
    return (f"{shlex.quote(sys.executable)} -m uamsched.milp.highs_runner "
            "{lp} {sol} --time-limit {time_limit}")


def find_cbc() -> str | None:
    exe = os.environ.get("UAMSCHED_CBC") or shutil.which("cbc")
    if exe:
        return exe
    try:  # pulp ships a CBC binary
        import pulp
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DeprecationWarning)
            path = pulp.apis.PULP_CBC_CMD().path
    except Exception:
        return None
    return path if path and os.path.exists(path) else None


def cbc_command(exe: str | None = None) -> str:
    exe = exe or find_cbc()
    if exe is None:
        raise BackendError("no cbc executable found")
    return (f"{shlex.quote(exe)} {{lp}} sec {{time_limit}} ratio 0 allow 0 "
            "printingOptions all solve solution {sol}")


def preset(name: str = "highs", time_limit: float = 600.0, keep_dir=None) -> BackendConfig:
    """Named backend: ``highs`` or ``cbc``."""
    if name == "highs":
        return BackendConfig(highs_command(), "generic", time_limit, keep_dir)
    if name == "cbc":
        return BackendConfig(cbc_command(), "cbc", time_limit, keep_dir)
    raise ValueError(f"unknown backend preset {name!r}")


def default_backend(time_limit: float = 600.0, command: str | None = None,
                    dialect: str = "generic", keep_dir=None) -> BackendConfig:
    """Backend from an explicit command, the environment override, or HiGHS."""
    command = command or os.environ.get(BACKEND_ENV)
    if command in ("highs", "cbc"):
        return preset(command, time_limit, keep_dir)
    if command:
        return BackendConfig(command, dialect, time_limit, keep_dir)
    return preset("highs", time_limit, keep_dir)


# -- solution dialects -------------------------------------------------------

def parse_generic(text: str) -> tuple:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise BackendError("empty solution file")
    status = {"optimal": OPTIMAL, "infeasible": INFEASIBLE,
              "timeout": TIMEOUT}.get(lines[0].lower())
    if status is None:
        raise BackendError(f"unknown status line {lines[0]!r}")
    values, obj = {}, None
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        key, _, val = ln.partition(" ")
        try:
            num = float(val)
        except ValueError as exc:
            raise BackendError(f"bad solution line {ln!r}") from exc
        if key == "=obj=":
            obj = num
        else:
            values[key] = num
    return status, values, obj


_CBC_STATUS = [
    ("optimal", OPTIMAL),
    ("infeasible", INFEASIBLE),
    ("integer infeasible", INFEASIBLE),
    ("stopped on time", TIMEOUT),
]


def parse_cbc(text: str, names) -> tuple:
    lines = text.splitlines()
    if not lines:
        raise BackendError("empty cbc solution file")
    head = lines[0].strip().lower()
    status = next((s for key, s in _CBC_STATUS if head.startswith(key)), None)
    if status is None:
        raise BackendError(f"unrecognised cbc status {lines[0]!r}")
    m = re.search(r"objective value\s+(\S+)", lines[0])
    obj = float(m.group(1)) if m else None
    values = {}
    for ln in lines[1:]:
        parts = ln.split()
        # "** idx name value reduced" marks infeasible rows/columns
        if parts and parts[0] == "**":
            parts = parts[1:]
        if len(parts) >= 3 and parts[1] in names:
            values[parts[1]] = float(parts[2])
    return status, values, obj


def parse_glpk(text: str, names) -> tuple:
    """Parse glpsol's printable report (``-o``)."""
    status = obj = None
    values = {}
    in_cols = False
    pending = None
    for ln in text.splitlines():
        s = ln.strip()
        if s.startswith("Status:"):
            word = s.split(":", 1)[1].strip().upper()
            if word in ("INTEGER OPTIMAL", "OPTIMAL"):
                status = OPTIMAL
            elif "EMPTY" in word or "INFEASIBLE" in word or "NO PRIMAL" in word:
                status = INFEASIBLE
            elif "UNDEFINED" in word or "NON-OPTIMAL" in word or word == "FEASIBLE":
                status = TIMEOUT
            else:
                raise BackendError(f"unrecognised glpk status {word!r}")
        elif s.startswith("Objective:"):
            m = re.search(r"=\s*(\S+)", s)
            obj = float(m.group(1)) if m else None
        elif s.startswith("No.") and "Column name" in s:
            in_cols = True
        elif in_cols:
            if not s or s.startswith("Integer feasibility") or s.startswith("KKT"):
                if not s and values:
                    in_cols = False
                continue
            if s.startswith("-"):
                continue
            parts = s.split()
            if pending is not None:
                # long names wrap: the numbers follow on the next line
                vals = [p for p in parts if p != "*"]
                values[pending] = float(vals[0])
                pending = None
                continue
            if len(parts) == 2 and parts[1] in names:
                pending = parts[1]
                continue
            if len(parts) >= 3 and parts[1] in names:
                vals = [p for p in parts[2:] if p != "*"]
                values[parts[1]] = float(vals[0])
    if status is None:
        raise BackendError("no status line in glpk report")
    return status, values, obj


def _round_values(model: LinearModel, raw: dict) -> dict:
    values = {}
    for name, var in model.variables.items():
        x = raw.get(name, 0.0)  # solvers may omit zero columns
        r = round(x)
        if abs(x - r) > INTEGRALITY_TOL:
            raise BackendError(f"{name} = {x} is not integral")
        if not var.lower <= r <= var.upper:
            raise BackendError(f"{name} = {r} outside [{var.lower}, {var.upper}]")
        values[name] = int(r)
    return values


def solve(model: LinearModel, backend: BackendConfig | None = None,
          tag: str = "model") -> SolveOutcome:
    """Write ``model`` as LP, run the backend command, and read the solution back."""
    backend = backend or default_backend()
    text = write_lp(model)
    keep = backend.keep_dir is not None
    workdir = backend.keep_dir if keep else tempfile.mkdtemp(prefix="uamsched_")
    Path(workdir).mkdir(parents=True, exist_ok=True)
    lp = os.path.join(workdir, f"{tag}.lp")
    sol = os.path.join(workdir, f"{tag}.sol")
    try:
        outcome = _run(model, backend, text, lp, sol)
    finally:
        if not keep:
            shutil.rmtree(workdir, ignore_errors=True)
    if keep:
        outcome.lp_path, outcome.sol_path = lp, sol
    return outcome


def _run(model, backend, text, lp, sol) -> SolveOutcome:
    Path(lp).write_text(text)
    if os.path.exists(sol):
        os.remove(sol)
    limit = backend.time_limit
    cmd = backend.command.format(lp=shlex.quote(lp), sol=shlex.quote(sol),
                                 time_limit=f"{limit:g}")
    log.debug("running %s", cmd)
    start = time.perf_counter()
    try:
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True,
                              timeout=limit + GRACE_SECONDS)
    except subprocess.TimeoutExpired as exc:
        return SolveOutcome(TIMEOUT, {}, None, time.perf_counter() - start, str(exc.stdout or ""))
    except OSError as exc:
        return SolveOutcome(BACKEND_ERROR, {}, None, 0.0, str(exc))
    elapsed = time.perf_counter() - start
    output = proc.stdout + proc.stderr
    try:
        if proc.returncode != 0:
            raise BackendError(f"solver exited with status {proc.returncode}")
        if not os.path.exists(sol):
            raise BackendError("solver wrote no solution file")
        sol_text = Path(sol).read_text()
        names = model.variables.keys()
        if backend.dialect == "generic":
            status, raw, _ = parse_generic(sol_text)
        elif backend.dialect == "cbc":
            status, raw, _ = parse_cbc(sol_text, names)
        else:
            status, raw, _ = parse_glpk(sol_text, names)
        if status != OPTIMAL:
            return SolveOutcome(status, {}, None, elapsed, output)
        values = _round_values(model, raw)
    except BackendError as exc:
        return SolveOutcome(BACKEND_ERROR, {}, None, elapsed, f"{exc}\n{output}")
    return SolveOutcome(OPTIMAL, values, model.objective.value(values), elapsed, output)
