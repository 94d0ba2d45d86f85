"""Exact 2D primitives for the image-method tracer.

Angles are degrees at every public boundary. Lengths are meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import GeometryError

EPS = 1e-9  # point coincidence, barycentric slack
EPS_T = 1e-6  # minimum travel before a ray may hit something


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def __add__(self, other: Point) -> Point:
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point) -> Point:
        return Point(self.x - other.x, self.y - other.y)

    def scale(self, k: float) -> Point:
        return Point(self.x * k, self.y * k)

    def dot(self, other: Point) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Point) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def isclose(self, other: Point, tol: float = EPS) -> bool:
        return self.dist(other) <= tol

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if self.a.dist(self.b) <= EPS:
            raise GeometryError(f"degenerate segment at ({self.a.x}, {self.a.y})")

    @property
    def length(self) -> float:
        return self.a.dist(self.b)

    @property
    def direction(self) -> Point:
        """Unit vector from ``a`` to ``b``."""
        d = self.b - self.a
        return d.scale(1.0 / d.norm())

    @property
    def normal(self) -> Point:
        """Unit normal, ``direction`` rotated +90 degrees."""
        d = self.direction
        return Point(-d.y, d.x)

    @property
    def midpoint(self) -> Point:
        return Point(0.5 * (self.a.x + self.b.x), 0.5 * (self.a.y + self.b.y))

    def distance_to(self, p: Point) -> float:
        ab = self.b - self.a
        u = (p - self.a).dot(ab) / ab.dot(ab)
        u = min(1.0, max(0.0, u))
        return p.dist(self.a + ab.scale(u))

    def is_parallel(self, other: Segment, tol: float = 1e-9) -> bool:
        return abs(self.direction.cross(other.direction)) <= tol


@dataclass(frozen=True)
class Ray:
    origin: Point
    dir: Point

    def __post_init__(self):
        if abs(self.dir.norm() - 1.0) > 1e-9:
            raise GeometryError("ray direction must be a unit vector")

    @classmethod
    def toward(cls, origin: Point, direction: Point) -> Ray:
        n = direction.norm()
        if n <= EPS:
            raise GeometryError("zero ray direction")
        return cls(origin, direction.scale(1.0 / n))

    def at(self, t: float) -> Point:
        return self.origin + self.dir.scale(t)


def intersect_ray_segment(ray: Ray, seg: Segment) -> Optional[Tuple[float, Point]]:
    """First hit of ``ray`` on ``seg`` as ``(t, point)``, or None.

    Hits closer than ``EPS_T`` are ignored so a ray leaving a surface does not
    re-hit it. Endpoints count as part of the segment.
    """
    e = seg.b - seg.a
    denom = ray.dir.cross(e)
    w = seg.a - ray.origin
    if abs(denom) <= EPS * e.norm():
        # parallel; a collinear overlap is a grazing contact, not a hit
        return None
    t = w.cross(e) / denom
    u = w.cross(ray.dir) / denom
    slack = EPS / e.norm()
    if t <= EPS_T or u < -slack or u > 1.0 + slack:
        return None
    return t, ray.at(t)


def mirror_point(p: Point, seg: Segment) -> Point:
    """Reflect ``p`` across the infinite line through ``seg``."""
    n = seg.normal
    d = (p - seg.a).dot(n)
    return p - n.scale(2.0 * d)


def reflect_dir(d: Point, n: Point) -> Point:
    k = 2.0 * d.dot(n)
    return Point(d.x - k * n.x, d.y - k * n.y)


def rotate_point(p: Point, angle_deg: float, pivot: Point) -> Point:
    th = math.radians(angle_deg)
    c, s = math.cos(th), math.sin(th)
    dx, dy = p.x - pivot.x, p.y - pivot.y
    return Point(pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy)


def rotate_segment(seg: Segment, angle_deg: float, pivot: Point) -> Segment:
    if not math.isfinite(angle_deg):
        raise GeometryError(f"non-finite rotation angle {angle_deg}")
    if angle_deg == 0:
        return seg
    return Segment(rotate_point(seg.a, angle_deg, pivot), rotate_point(seg.b, angle_deg, pivot))
