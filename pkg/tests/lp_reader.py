"""Minimal reader for the LP subset the writer emits; test use only."""
from __future__ import annotations

import re

_TERM = re.compile(r"([+-])?\s*(\d[0-9.]*(?:[eE][+-]?\d+)?\s+)?([A-Za-z_][A-Za-z0-9_]*)")


def _terms(text):
    out = {}
    text = text.strip()
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse {text[pos:]!r}")
        sign, coef, name = m.groups()
        c = float(coef) if coef else 1.0
        out[name] = -c if sign == "-" else c
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return out


def read_lp(text: str) -> dict:
    """Parse into ``{"objective", "constraints", "bounds", "generals", "binaries"}``."""
    section = None
    doc = {"objective": {}, "constraints": {}, "bounds": {}, "generals": [], "binaries": []}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in ("Maximize", "Subject To", "Bounds", "Generals", "Binaries", "End"):
            section = line
            current = None
            continue
        if section == "Maximize":
            body = line.split(":", 1)[1] if line.startswith("obj:") else line
            body = body.strip()
            if body.startswith("0 "):
                continue
            doc["objective"].update(_terms(body))
        elif section == "Subject To":
            if ":" in line.split()[0]:
                name, body = line.split(":", 1)
                current = [name.strip(), body]
            else:
                current[1] += " " + line
            m = re.search(r"(<=|>=|=)\s*(\S+)$", current[1])
            if m:
                sense, rhs = m.groups()
                body = current[1][:m.start()]
                doc["constraints"][current[0]] = (_terms(body), sense, float(rhs))
                current = None
        elif section == "Bounds":
            m = re.match(r"(\S+) <= (\S+) <= (\S+)$", line)
            if m:
                doc["bounds"][m.group(2)] = (int(m.group(1)), int(m.group(3)))
            else:
                name, _, val = line.partition(" = ")
                doc["bounds"][name] = (int(val), int(val))
        elif section == "Generals":
            doc["generals"].append(line)
        elif section == "Binaries":
            doc["binaries"].append(line)
    return doc
