"""Periodic obstacle configurations and the betweenness predicate.

Two geometries share one interface:

* ``torus``  -- the obstacle lifts to translated balls centered at Z^m.
* ``square`` -- the unit square unfolds by reflections about half-integer
  lines; each cell k = (p, q) holds a mirrored copy of the obstacle whose
  center is (p + (-1)^p c_x, q + (-1)^q c_y).

Obstacle k is *between* obstacles i and j when it meets the convex hull of
their union.  For equal balls of radius r that hull is the radius-r capsule
around the center segment, so the test reduces to a point-to-segment
distance against 2r.  Tangency counts as between (conservative: marginal
graph edges are dropped rather than admitting itineraries the solver cannot
realize).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import geometry as geo
from .errors import ConfigError

SMALL_OBSTACLE_LIMIT = math.sqrt(2.0) / 4.0
# Betweenness boundary slack: distance <= 2r + TAU_BETWEEN counts as between.
TAU_BETWEEN = 1e-12

TORUS = "torus"
SQUARE = "square"

LatticeIndex = tuple[int, ...]


@dataclass(frozen=True)
class BilliardConfig:
    """Geometry kind, dimension, obstacle radius, and (square only) center."""

    geometry: str
    dim: int
    radius: float
    center: tuple[float, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.geometry not in (TORUS, SQUARE):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.dim < 2:
            raise ConfigError(f"dimension must be >= 2, got {self.dim}")
        if not 0.0 < self.radius < SMALL_OBSTACLE_LIMIT:
            raise ConfigError(
                f"small obstacle requires 0 < r < sqrt(2)/4 = "
                f"{SMALL_OBSTACLE_LIMIT:.6f}, got r = {self.radius}"
            )
        if self.geometry == SQUARE:
            if self.dim != 2:
                raise ConfigError("square geometry requires dim = 2")
            c = self.center if self.center is not None else (0.0, 0.0)
            c = tuple(float(x) for x in c)
            if len(c) != 2:
                raise ConfigError("square center must have two components")
            if geo.norm(c) + self.radius >= SMALL_OBSTACLE_LIMIT:
                raise ConfigError(
                    "square obstacle must fit in the open ball of radius "
                    "sqrt(2)/4 about the origin: |center| + r = "
                    f"{geo.norm(c) + self.radius:.6f}"
                )
            object.__setattr__(self, "center", c)
        else:
            if self.center is not None and any(x != 0.0 for x in self.center):
                raise ConfigError("torus obstacle center is fixed at the lattice")
            object.__setattr__(self, "center", tuple(0.0 for _ in range(self.dim)))

    @classmethod
    def from_dict(cls, doc: dict) -> "BilliardConfig":
        try:
            geometry = doc["geometry"]
            dim = int(doc["dim"])
            radius = float(doc["radius"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config document: {exc}") from exc
        center = doc.get("center")
        return cls(geometry=geometry, dim=dim, radius=radius,
                   center=tuple(center) if center is not None else None)

    @classmethod
    def from_file(cls, path: str) -> "BilliardConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry,
            "dim": self.dim,
            "radius": self.radius,
            "center": list(self.center),
        }


def parity(k: Sequence[int]) -> tuple[int, int]:
    """Componentwise parity of a 2d lattice index (the square unfolding class)."""
    if len(k) != 2:
        raise ConfigError(f"parity is defined for dim 2, got {len(k)} components")
    return (int(k[0]) % 2, int(k[1]) % 2)


def obstacle_center(k: Sequence[int], cfg: BilliardConfig) -> geo.Vec:
    """Center of the obstacle copy in lattice cell k."""
    k = tuple(int(c) for c in k)
    if len(k) != cfg.dim:
        raise ConfigError(f"lattice index {k} has wrong dimension for m={cfg.dim}")
    if cfg.geometry == TORUS:
        return tuple(float(c) for c in k)
    p, q = k
    cx, cy = cfg.center
    return (p + (-1.0) ** (p % 2) * cx, q + (-1.0) ** (q % 2) * cy)


def _between_centers(ck: geo.Vec, ci: geo.Vec, cj: geo.Vec, r: float) -> bool:
    # Degenerate reference pair: the capsule collapses to one ball.
    if ci == cj:
        return geo.dist(ck, ci) <= 2.0 * r + TAU_BETWEEN
    return geo.point_segment_distance(ck, ci, cj) <= 2.0 * r + TAU_BETWEEN


def is_between(
    k: Sequence[int], i: Sequence[int], j: Sequence[int], cfg: BilliardConfig
) -> bool:
    """True when obstacle k meets the convex hull of obstacles i and j.

    ``i == j`` degenerates to a ball-ball intersection test, which is what
    the hull definition gives for a coincident pair.
    """
    k = tuple(int(c) for c in k)
    i = tuple(int(c) for c in i)
    j = tuple(int(c) for c in j)
    if k == i or k == j:
        raise ConfigError(f"is_between requires k distinct from i and j, got k={k}")
    return _between_centers(
        obstacle_center(k, cfg), obstacle_center(i, cfg), obstacle_center(j, cfg),
        cfg.radius,
    )


def _cells_near_segment(a: geo.Vec, b: geo.Vec, cfg: BilliardConfig, margin: float):
    """All lattice cells whose obstacle center is within margin of segment [a, b]."""
    m = cfg.dim
    # Obstacle centers sit within 1/2 of their lattice cell in every geometry.
    lo = [math.floor(min(a[d], b[d]) - margin - 1.0) for d in range(m)]
    hi = [math.ceil(max(a[d], b[d]) + margin + 1.0) for d in range(m)]
    out = []
    degenerate = a == b
    for cell in itertools.product(*(range(lo[d], hi[d] + 1) for d in range(m))):
        c = obstacle_center(cell, cfg)
        if degenerate:
            d = geo.dist(c, a)
        else:
            d = geo.point_segment_distance(c, a, b)
        if d <= margin:
            out.append(cell)
    return out


def candidate_blockers(
    i: Sequence[int], j: Sequence[int], cfg: BilliardConfig
) -> list[LatticeIndex]:
    """Lattice cells that could possibly block the i -> j transition.

    Superset guarantee: every k with is_between(k, i, j) true appears here
    (its center is within 2r < 2r + 1 of the segment).
    """
    i = tuple(int(c) for c in i)
    j = tuple(int(c) for c in j)
    if i == j:
        raise ConfigError("candidate_blockers requires i != j")
    a, b = obstacle_center(i, cfg), obstacle_center(j, cfg)
    margin = 2.0 * cfg.radius + 1.0
    return sorted(c for c in _cells_near_segment(a, b, cfg, margin) if c not in (i, j))


def has_blocker(i: Sequence[int], j: Sequence[int], cfg: BilliardConfig) -> bool:
    """True when some obstacle lies between obstacles i and j."""
    i = tuple(int(c) for c in i)
    j = tuple(int(c) for c in j)
    a, b = obstacle_center(i, cfg), obstacle_center(j, cfg)
    threshold = 2.0 * cfg.radius + TAU_BETWEEN
    for cell in _cells_near_segment(a, b, cfg, threshold):
        if cell != i and cell != j:
            return True
    return False


def obstacle_cells_near_points(
    a: geo.Vec, b: geo.Vec, cfg: BilliardConfig, margin: float
) -> list[LatticeIndex]:
    """Cells whose obstacle could come within margin of the point segment [a, b].

    Used for clearance certification of trajectory segments (a, b are points
    in space, not lattice cells).
    """
    return _cells_near_segment(tuple(a), tuple(b), cfg, margin)
