"""Dimension-generic floating-point primitives: vectors, segments, balls, rays.

Vectors are plain tuples of floats; the hot paths (flow stepping, betweenness
scans) stay in scalar Python arithmetic, which beats small-array numpy at the
2-3 dimensions this package works in.

Tolerances are centralized here: TAU_GEOM for identity checks, TAU_HIT for
event times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import GeometryError, InsideObstacleError, InvalidSegmentError

# Identity-level comparisons (point on sphere, unit norm, involution).
TAU_GEOM = 1e-12
# Event-time guard: a ray leaving a boundary must not re-hit it immediately.
TAU_HIT = 1e-9

Vec = tuple[float, ...]


def vec(x: Sequence[float]) -> Vec:
    return tuple(float(c) for c in x)


def add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def scale(a: Vec, s: float) -> Vec:
    return tuple(x * s for x in a)


def dot(a: Vec, b: Vec) -> float:
    return sum(x * y for x, y in zip(a, b))


def norm(a: Vec) -> float:
    return math.sqrt(sum(x * x for x in a))


def dist(a: Vec, b: Vec) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def unit(a: Vec) -> Vec:
    n = norm(a)
    if n == 0.0:
        raise GeometryError("cannot normalize the zero vector")
    return tuple(x / n for x in a)


@dataclass(frozen=True)
class Ball:
    """Closed ball with positive radius."""

    center: Vec
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", vec(self.center))
        if not self.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Ray:
    """Origin plus unit direction."""

    origin: Vec
    direction: Vec

    def __post_init__(self):
        object.__setattr__(self, "origin", vec(self.origin))
        object.__setattr__(self, "direction", vec(self.direction))
        if abs(norm(self.direction) - 1.0) > TAU_GEOM:
            raise GeometryError(
                f"ray direction must be a unit vector, norm {norm(self.direction)!r}"
            )


def point_segment_distance(p: Sequence[float], a: Sequence[float], b: Sequence[float]) -> float:
    """Distance from p to the segment [a, b].

    The projection parameter is clamped to [0, 1]; degenerate segments are
    rejected.
    """
    p, a, b = vec(p), vec(a), vec(b)
    if b < a:
        a, b = b, a  # canonical endpoint order makes the swap symmetry exact
    d = sub(b, a)
    dd = dot(d, d)
    if dd == 0.0:
        raise InvalidSegmentError(f"degenerate segment: a == b == {a}")
    t = dot(sub(p, a), d) / dd
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return dist(p, add(a, scale(d, t)))


def reflect_direction(v: Sequence[float], n: Sequence[float]) -> Vec:
    """Specular reflection v - 2<v,n>n of a unit direction about a unit normal."""
    v, n = vec(v), vec(n)
    if abs(norm(v) - 1.0) > 1e-9 or abs(norm(n) - 1.0) > 1e-9:
        raise GeometryError("reflect_direction requires unit direction and normal")
    s = 2.0 * dot(v, n)
    return tuple(x - s * y for x, y in zip(v, n))


def ray_sphere_time(
    origin: Vec, direction: Vec, center: Vec, radius: float, t_min: float = TAU_HIT
) -> Optional[float]:
    """Smallest t > t_min with |origin + t*direction - center| = radius.

    Scalar fast path used by the flow; assumes a unit direction. Returns None
    on a miss. Raises if the origin is strictly inside the sphere.
    """
    oc = sub(origin, center)
    b = dot(direction, oc)
    c0 = dot(oc, oc) - radius * radius
    if c0 < -TAU_GEOM * max(1.0, radius):
        raise InsideObstacleError(
            f"ray origin {origin} lies inside the obstacle at {center}"
        )
    disc = b * b - c0
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t1 = -b - sq
    if t1 > t_min:
        return t1
    t2 = -b + sq
    if t2 > t_min:
        return t2
    return None


def ray_ball_intersect(ray: Ray, ball: Ball, t_min: float = TAU_HIT) -> Optional[float]:
    """First crossing time of a ray with a ball boundary, or None."""
    return ray_sphere_time(ray.origin, ray.direction, ball.center, ball.radius, t_min)


def angle_between(u: Sequence[float], v: Sequence[float]) -> float:
    """Angle in [0, pi] between two nonzero vectors.

    The cosine is clamped to [-1, 1] so collinear inputs cannot produce NaN.
    """
    u, v = vec(u), vec(v)
    nu, nv = norm(u), norm(v)
    if nu == 0.0 or nv == 0.0:
        raise GeometryError("angle_between requires nonzero vectors")
    c = dot(u, v) / (nu * nv)
    c = max(-1.0, min(1.0, c))
    return math.acos(c)
