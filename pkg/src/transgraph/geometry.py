"""Plane primitives shared by every other module.

All containment and intersection predicates compare squared distances, so
for integer-valued coordinates and radii up to 2**20 they are exact.  The
six-cone machinery partitions directions around an apex into half-open
60-degree sectors; sector boundaries are resolved by exact sign tests
(dy*dy versus 3*dx*dx), never by trigonometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class CoincidentApexError(ValueError):
    """Raised when a cone index is requested for a point equal to the apex."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class TransmissionPoint:
    """A site with a transmission radius; node of the transmission graph."""

    id: int
    pos: Point
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"transmission radius must be positive and finite, got {self.radius}")

    @property
    def disk(self) -> "Disk":
        return Disk(self.pos, self.radius)


@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise ValueError(f"disk radius must be non-negative and finite, got {self.radius}")


@dataclass(frozen=True)
class Square:
    """Axis-aligned square given by its center and half edge length."""

    center: Point
    half_edge: float

    def __post_init__(self):
        if not (math.isfinite(self.half_edge) and self.half_edge >= 0):
            raise ValueError(f"square half_edge must be non-negative and finite, got {self.half_edge}")


#: Valid cone indices.  Cone i covers polar angles [(i-1)*60, i*60) degrees.
CONE_INDICES = (1, 2, 3, 4, 5, 6)


def squared_distance(a: Point, b: Point) -> float:
    dx = a.x - b.x
    dy = a.y - b.y
    return dx * dx + dy * dy


def disk_contains(d: Disk, q: Point) -> bool:
    """Closed containment: boundary points count as contained."""
    return squared_distance(d.center, q) <= d.radius * d.radius


def disks_intersect(a: Disk, b: Disk) -> bool:
    """Closed intersection: tangent disks count as intersecting."""
    r = a.radius + b.radius
    return squared_distance(a.center, b.center) <= r * r


def _upper_half_cone(dx: float, dy: float) -> int:
    # Cone for directions with polar angle in [0, 180): dy > 0, or dy == 0 with dx > 0.
    # Boundaries at 60 and 120 degrees satisfy dy*dy == 3*dx*dx; the half-open
    # rule keeps 60 in cone 2 and 120 in cone 3.
    if dx > 0:
        return 1 if dy * dy < 3 * dx * dx else 2
    if dx == 0:
        return 2
    return 2 if dy * dy > 3 * dx * dx else 3


def canonical_cone_index(apex: Point, q: Point) -> int:
    """Index in 1..6 of the 60-degree cone at ``apex`` containing ``q``.

    Cone i spans polar angles [(i-1)*60, i*60) degrees, half-open so the six
    cones partition all directions.  Exact for integer inputs.
    """
    dx = q.x - apex.x
    dy = q.y - apex.y
    if dx == 0 and dy == 0:
        raise CoincidentApexError("cone index undefined for q equal to apex")
    if dy > 0 or (dy == 0 and dx > 0):
        return _upper_half_cone(dx, dy)
    return _upper_half_cone(-dx, -dy) + 3


def sector_contains(p: TransmissionPoint, i: int, t: Point) -> bool:
    """Is ``t`` inside the sector of p's disk opposite cone ``i``?

    True iff p lies in cone i as seen from t and t lies in p's disk.  A query
    point coinciding with p counts as contained with cone assignment 1, so the
    predicate is total.
    """
    if t.x == p.pos.x and t.y == p.pos.y:
        return i == 1
    return canonical_cone_index(t, p.pos) == i and disk_contains(p.disk, t)
