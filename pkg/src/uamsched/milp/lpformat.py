"""CPLEX LP text emission."""
from __future__ import annotations

from .linear import LinearModel, check_name

_WRAP = 200


def fmt_number(c) -> str:
    """Decimal with 12 significant digits."""
    if type(c) is int and abs(c) < 10 ** 12:
        return str(c)
    s = format(float(c), ".12g")
    return "0" if s == "-0" else s


def _expr_lines(terms: dict, head: str) -> list:
    lines, cur = [], head
    first = True
    for name, c in terms.items():
        if c == 0:
            continue
        neg = c < 0
        mag = -c if neg else c
        coef = "" if mag == 1 else fmt_number(mag) + " "
        sign = "- " if neg else ("" if first else "+ ")
        tok = f"{sign}{coef}{name}"
        first = False
        if len(cur) + len(tok) + 1 > _WRAP and cur.strip():
            lines.append(cur)
            cur = "   "
        cur = f"{cur} {tok}"
    if first:
        cur = f"{cur} 0"
    lines.append(cur)
    return lines


def write_lp(model: LinearModel) -> str:
    """Serialize ``model`` as CPLEX LP text (deterministic, declaration order)."""
    for name in model.variables:
        check_name(name)
    model.check()
    out = [f"\\ {model.name}", "Maximize"]
    obj = model.objective.terms
    if not obj and model.variables:
        # readers want at least one objective term
        out.append(f" obj: 0 {next(iter(model.variables))}")
    else:
        out.extend(_expr_lines(obj, " obj:"))
    out.append("Subject To")
    for con in model.constraints:
        lines = _expr_lines(con.terms, f" {con.name}:")
        lines[-1] += f" {con.sense} {fmt_number(con.rhs)}"
        out.extend(lines)
    out.append("Bounds")
    for v in model.variables.values():
        if v.kind == "binary" and (v.lower, v.upper) == (0, 1):
            continue
        if v.lower == v.upper:
            out.append(f" {v.name} = {v.lower}")
        else:
            out.append(f" {v.lower} <= {v.name} <= {v.upper}")
    if model.generals:
        out.append("Generals")
        out.extend(f" {n}" for n in model.generals)
    if model.binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in model.binaries)
    out.append("End")
    return "\n".join(out) + "\n"
