"""Edge intersection tests for the fully connected station graph.

Two vehicles flying along intersecting edges at the same time step must use
different flight levels.  This module decides which edges intersect.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

CONSERVATIVE = "conservative"
STRICT = "strict"
ENDPOINT_POLICIES = (CONSERVATIVE, STRICT)


class GeometryError(ValueError):
    """Invalid geometric input (degenerate segment, duplicate station...)."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinate in {self!r}")


EdgeId = tuple  # (a, b) with a < b


def edge_id(a: int, b: int) -> EdgeId:
    """Canonical undirected edge id."""
    if a == b:
        raise GeometryError(f"self-loop edge ({a}, {b})")
    return (a, b) if a < b else (b, a)


def orientation(p: Point2, q: Point2, r: Point2) -> int:
    """Sign of the cross product (q - p) x (r - p): 1 left turn, -1 right, 0 collinear."""
    cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    return (cross > 0) - (cross < 0)


def _within_box(p: Point2, q: Point2, r: Point2) -> bool:
    # r is collinear with p-q; is it inside the closed bounding box?
    return (min(p.x, q.x) <= r.x <= max(p.x, q.x)
            and min(p.y, q.y) <= r.y <= max(p.y, q.y))


def _closed_intersect(p1, p2, q1, q2) -> bool:
    o1 = orientation(p1, p2, q1)
    o2 = orientation(p1, p2, q2)
    o3 = orientation(q1, q2, p1)
    o4 = orientation(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and _within_box(p1, p2, q1))
            or (o2 == 0 and _within_box(p1, p2, q2))
            or (o3 == 0 and _within_box(q1, q2, p1))
            or (o4 == 0 and _within_box(q1, q2, p2)))


def segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2,
                       endpoint_policy: str = CONSERVATIVE) -> bool:
    """Whether closed segments p1-p2 and q1-q2 share a point.

    With ``endpoint_policy="strict"`` two segments whose only common point is
    a shared endpoint do not count as intersecting.  Collinear overlap always
    counts.
    """
    if endpoint_policy not in ENDPOINT_POLICIES:
        raise GeometryError(f"unknown endpoint policy {endpoint_policy!r}")
    if p1 == p2 or q1 == q2:
        raise GeometryError("zero-length segment")
    if not _closed_intersect(p1, p2, q1, q2):
        return False
    if endpoint_policy == CONSERVATIVE:
        return True

    shared = {p1, p2} & {q1, q2}
    if not shared:
        return True
    if len(shared) == 2:
        return True  # same segment
    (pivot,) = shared
    a = p2 if p1 == pivot else p1
    b = q2 if q1 == pivot else q1
    if orientation(pivot, a, b) != 0:
        return False
    # collinear legs from the common endpoint overlap iff they point the same way
    dot = (a.x - pivot.x) * (b.x - pivot.x) + (a.y - pivot.y) * (b.y - pivot.y)
    return dot > 0


class ConflictSets(Mapping):
    """Per-edge sets of intersecting edges, keyed by canonical EdgeId.

    Symmetric and irreflexive.  ``conflicts(e, d)`` additionally treats an edge
    as conflicting with itself, which is what flight-level separation needs.
    """

    def __init__(self, sets: dict):
        self._sets = {e: frozenset(ds) for e, ds in sets.items()}

    def __getitem__(self, e) -> frozenset:
        return self._sets[edge_id(*e)]

    def __iter__(self) -> Iterator:
        return iter(self._sets)

    def __len__(self) -> int:
        return len(self._sets)

    def conflicts(self, e, d) -> bool:
        e, d = edge_id(*e), edge_id(*d)
        return e == d or d in self._sets[e]

    def pairs(self) -> list:
        """Sorted list of unordered conflicting edge pairs."""
        return sorted((e, d) for e, ds in self._sets.items() for d in ds if e < d)

    def to_json(self) -> dict:
        return {f"{a}-{b}": [list(d) for d in sorted(ds)]
                for (a, b), ds in sorted(self._sets.items())}


def conflict_sets(stations: Sequence[Point2], endpoint_policy: str = CONSERVATIVE,
                  ids: Iterable[int] | None = None) -> ConflictSets:
    """Conflict sets for every edge of the complete graph over ``stations``.

    ``ids`` gives the station id of each point (defaults to positions).
    """
    pts = list(stations)
    ids = list(range(len(pts))) if ids is None else list(ids)
    if len(pts) < 2:
        raise GeometryError("need at least two stations")
    if len(ids) != len(pts):
        raise GeometryError("ids and stations differ in length")
    if len(set(pts)) != len(pts):
        raise GeometryError("duplicate station coordinates")
    where = dict(zip(ids, pts))
    edges = [edge_id(a, b) for a, b in itertools.combinations(sorted(ids), 2)]
    sets = {e: set() for e in edges}
    for e, d in itertools.combinations(edges, 2):
        if segments_intersect(where[e[0]], where[e[1]], where[d[0]], where[d[1]],
                              endpoint_policy):
            sets[e].add(d)
            sets[d].add(e)
    return ConflictSets(sets)
