"""Solver-agnostic integer linear model and the absolute-value linearizations."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number

BINARY = "binary"
INTEGER = "integer"

LE, GE, EQ = "<=", ">=", "="

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ModelError(ValueError):
    """Structural problem in a LinearModel."""


def _coef(c):
    # ints are already exact and much cheaper than Fraction
    if type(c) is int:
        return c
    if isinstance(c, float):
        c = Fraction(repr(c))
    else:
        c = Fraction(c)
    return c.numerator if c.denominator == 1 else c


class LinExpr:
    """Sparse linear expression: ``sum(coef * var) + constant`` over variable names."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms=None, constant=0):
        self.terms = {}
        self.constant = _coef(constant)
        for name, c in (terms or {}).items():
            self._add(name, _coef(c))

    def _add(self, name, c):
        v = self.terms.get(name, 0) + c
        if v:
            self.terms[name] = v
        else:
            self.terms.pop(name, None)

    @classmethod
    def of(cls, x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, str):
            return cls({x: 1})
        if isinstance(x, Number):
            return cls(constant=x)
        raise TypeError(f"cannot make a linear expression from {x!r}")

    def copy(self) -> "LinExpr":
        out = LinExpr()
        out.terms = dict(self.terms)
        out.constant = self.constant
        return out

    def __add__(self, other):
        other = LinExpr.of(other)
        out = self.copy()
        for name, c in other.terms.items():
            out._add(name, c)
        out.constant += other.constant
        return out

    __radd__ = __add__

    def __neg__(self):
        out = LinExpr()
        out.terms = {k: -c for k, c in self.terms.items()}
        out.constant = -self.constant
        return out

    def __sub__(self, other):
        return self + (-LinExpr.of(other))

    def __rsub__(self, other):
        return LinExpr.of(other) - self

    def __mul__(self, k):
        if not isinstance(k, Number):
            return NotImplemented
        k = _coef(k)
        out = LinExpr()
        if k:
            out.terms = {name: c * k for name, c in self.terms.items()}
        out.constant = self.constant * k
        return out

    __rmul__ = __mul__

    def value(self, values):
        return self.constant + sum(c * values[name] for name, c in self.terms.items())

    def __repr__(self):
        parts = [f"{c}*{n}" for n, c in self.terms.items()]
        return f"LinExpr({' + '.join(parts) or '0'} + {self.constant})"


def lsum(items) -> LinExpr:
    """Sum of names/expressions/numbers, without quadratic copying."""
    out = LinExpr()
    for x in items:
        if isinstance(x, str):
            out._add(x, Fraction(1))
        else:
            x = LinExpr.of(x)
            for name, c in x.terms.items():
                out._add(name, c)
            out.constant += x.constant
    return out


@dataclass
class Variable:
    name: str
    kind: str
    lower: int
    upper: int


@dataclass
class Constraint:
    name: str
    terms: dict
    sense: str
    rhs: Fraction

    def satisfied(self, values, tol=1e-9) -> bool:
        lhs = sum(c * values[n] for n, c in self.terms.items())
        if self.sense == LE:
            return lhs <= self.rhs + tol
        if self.sense == GE:
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


class LinearModel:
    """Integer program: maximize a linear objective subject to linear constraints."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: dict[str, Variable] = {}
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self._cnames = set()
        self._aux = 0

    def add_var(self, name: str, kind: str = BINARY, lower: int = 0, upper: int = 1) -> str:
        check_name(name)
        if name in self.variables or name in self._cnames:
            raise ModelError(f"duplicate name {name!r}")
        if kind not in (BINARY, INTEGER):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY and not (0 <= lower <= upper <= 1):
            raise ModelError(f"binary {name} with bounds [{lower}, {upper}]")
        if lower > upper:
            raise ModelError(f"{name}: lower bound {lower} > upper bound {upper}")
        self.variables[name] = Variable(name, kind, int(lower), int(upper))
        return name

    def fresh_name(self, prefix: str) -> str:
        while True:
            self._aux += 1
            name = f"{prefix}{self._aux}"
            if name not in self.variables and name not in self._cnames:
                return name

    def add_constraint(self, name: str, lhs, sense: str, rhs=0) -> Constraint:
        """Add ``lhs sense rhs``; constants in either side are moved to the right."""
        if sense not in (LE, GE, EQ):
            raise ModelError(f"unknown sense {sense!r}")
        check_name(name)
        if name in self._cnames or name in self.variables:
            raise ModelError(f"duplicate name {name!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        for var in expr.terms:
            if var not in self.variables:
                raise ModelError(f"constraint {name} references undeclared {var!r}")
        if not expr.terms:
            if not Constraint(name, {}, sense, -expr.constant).satisfied({}):
                raise ModelError(f"constraint {name} is constant and violated")
            return None  # trivially true, not emitted
        con = Constraint(name, expr.terms, sense, -expr.constant)
        self._cnames.add(name)
        self.constraints.append(con)
        return con

    def set_objective(self, expr) -> None:
        expr = LinExpr.of(expr)
        for var in expr.terms:
            if var not in self.variables:
                raise ModelError(f"objective references undeclared {var!r}")
        self.objective = expr

    def bounds(self, x) -> tuple:
        """Range of an expression given variable bounds."""
        x = LinExpr.of(x)
        lo = hi = x.constant
        for name, c in x.terms.items():
            v = self.variables[name]
            a, b = c * v.lower, c * v.upper
            lo += min(a, b)
            hi += max(a, b)
        return lo, hi

    def check(self) -> None:
        """Raise ModelError unless every invariant holds."""
        for v in self.variables.values():
            check_name(v.name)
            if v.lower > v.upper:
                raise ModelError(f"{v.name}: empty bounds")
        for con in self.constraints:
            for var in con.terms:
                if var not in self.variables:
                    raise ModelError(f"{con.name} references undeclared {var!r}")
        for var in self.objective.terms:
            if var not in self.variables:
                raise ModelError(f"objective references undeclared {var!r}")

    def is_feasible(self, values, tol=1e-9) -> bool:
        """Whether a full assignment satisfies bounds, integrality and constraints."""
        for v in self.variables.values():
            x = values[v.name]
            if x != int(x) or not v.lower <= x <= v.upper:
                return False
        return all(c.satisfied(values, tol) for c in self.constraints)

    def violated(self, values, tol=1e-9) -> list:
        return [c.name for c in self.constraints if not c.satisfied(values, tol)]

    @property
    def binaries(self) -> list:
        return [v.name for v in self.variables.values() if v.kind == BINARY]

    @property
    def generals(self) -> list:
        return [v.name for v in self.variables.values() if v.kind == INTEGER]

    def __repr__(self):
        return (f"LinearModel({self.name!r}, {len(self.variables)} vars, "
                f"{len(self.constraints)} constraints)")


def check_name(name: str) -> None:
    if not isinstance(name, str) or len(name) > 255 or not _NAME.match(name):
        raise ModelError(f"illegal LP name {name!r}")


def add_abs_diff_lower_bound(model: LinearModel, x, y, threshold, big_m,
                             name: str | None = None, direction: str | None = None) -> str:
    """Encode ``|x - y| >= threshold`` with one direction binary and two rows.

        x - y >= threshold - M (1 - z)
        y - x >= threshold - M z

    ``x`` and ``y`` are variable names or constants.  With ``big_m`` at least
    the span of ``x - y`` this is exact whenever a positive threshold only
    occurs when both sides sit at least one unit above their lower bounds
    (true for flight levels: a positive threshold means both vehicles fly).
    For arbitrary valuations use ``big_m >= span + max(threshold)``.

    ``direction`` reuses an existing binary instead of declaring a new one.
    Returns the direction binary's name.
    """
    x, y, thr = LinExpr.of(x), LinExpr.of(y), LinExpr.of(threshold)
    lo, hi = model.bounds(x - y)
    span = max(hi, -lo)
    if big_m < span:
        raise ModelError(f"big_m {big_m} smaller than the range span {span}")
    z = direction or model.add_var(model.fresh_name("z"), BINARY)
    base = name or model.fresh_name("sep")
    # x - y - thr - M z >= -M
    model.add_constraint(f"{base}_a", x - y - thr - big_m * LinExpr.of(z), GE, -big_m)
    # y - x - thr + M z >= 0
    model.add_constraint(f"{base}_b", y - x - thr + big_m * LinExpr.of(z), GE, 0)
    return z


def add_abs_value_var(model: LinearModel, x1: str, x2: str, name: str | None = None) -> str:
    """Fresh binary ``d`` with ``d >= x2 - x1`` and ``d >= x1 - x2`` (x1, x2 binary)."""
    d = model.add_var(name or model.fresh_name("d"), BINARY)
    model.add_constraint(f"{d}_p", LinExpr({d: 1, x2: -1, x1: 1}), GE, 0)
    model.add_constraint(f"{d}_n", LinExpr({d: 1, x1: -1, x2: 1}), GE, 0)
    return d
