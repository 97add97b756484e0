"""Billiard trajectory pieces and periodic orbits by length minimization.

A trajectory piece of a prescribed itinerary is the broken line through one
reflection point per obstacle boundary that minimizes total length; at the
minimum the incidence and reflection angles agree at every interior point.
Periodic orbits close through a ghost copy of the first point translated by
the period displacement.

The solve runs monotone block-coordinate descent (each sub-step moves one
point to the exact single-sphere optimum) for globalization, then polishes
the whole chain with Newton on the stationarity system, and finally
certifies the reflection law, boundary membership, and obstacle clearance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import geometry as geo
from . import graph as gr
from . import lattice
from .errors import ConfigError, InvariantError, SolverError
from .lattice import BilliardConfig

# Certified post-conditions for a converged solve.
RESIDUAL_TOL = 1e-9     # reflection-law violation, radians
BOUNDARY_TOL = 1e-12    # sphere membership
CLEARANCE_TOL = 1e-9    # segment distance shortfall from non-endpoint obstacles

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PeriodicOrbit:
    """Converged periodic orbit for a loop with displacement p and period q."""

    cells: tuple[lattice.LatticeIndex, ...]
    displacement: tuple[float, ...]
    period: int
    points: tuple[geo.Vec, ...]
    length: float
    rotation_vector: tuple[float, ...]
    residual: float
    iterations: int
    length_trace: tuple[float, ...] = field(repr=False, default=())
    loop: Optional[gr.LoopSpec] = field(repr=False, default=None)


@dataclass(frozen=True)
class ConstrainedPath:
    """Shortest path of a finite itinerary, endpoints free or pinned."""

    cells: tuple[lattice.LatticeIndex, ...]
    points: tuple[geo.Vec, ...]
    length: float
    displacement: tuple[float, ...]
    residual: float
    iterations: int
    length_trace: tuple[float, ...] = field(repr=False, default=())


# ---------------------------------------------------------------------------
# Single-sphere subproblem


def _orthonormal_pair(e1: geo.Vec) -> geo.Vec:
    """Deterministic unit vector orthogonal to e1."""
    axis = min(range(len(e1)), key=lambda d: (abs(e1[d]), d))
    v = [0.0] * len(e1)
    v[axis] = 1.0
    w = geo.sub(tuple(v), geo.scale(e1, e1[axis]))
    return geo.unit(w)


def _best_point_on_sphere(a: Optional[geo.Vec], b: Optional[geo.Vec],
                          c: geo.Vec, r: float, tol: float) -> geo.Vec:
    """Minimize |x-a| + |x-b| over the sphere about c (either anchor optional)."""
    if a is None and b is None:
        raise SolverError("sphere subproblem needs at least one anchor")
    if a is None or b is None or geo.dist(a, b) < 1e-14:
        target = a if a is not None else b
        return geo.add(c, geo.scale(geo.unit(geo.sub(target, c)), r))

    e1 = geo.unit(geo.sub(a, c))
    w = geo.sub(b, c)
    w = geo.sub(w, geo.scale(e1, geo.dot(w, e1)))
    nw = geo.norm(w)
    e2 = geo.scale(w, 1.0 / nw) if nw > 1e-12 else _orthonormal_pair(e1)

    def point(theta: float) -> geo.Vec:
        cs, sn = r * math.cos(theta), r * math.sin(theta)
        return tuple(cc + cs * u + sn * v for cc, u, v in zip(c, e1, e2))

    def f(theta: float) -> float:
        x = point(theta)
        return geo.dist(x, a) + geo.dist(x, b)

    grid = 32
    best_k = min(range(grid), key=lambda k: f(2.0 * math.pi * k / grid))
    lo = 2.0 * math.pi * (best_k - 1) / grid
    hi = 2.0 * math.pi * (best_k + 1) / grid
    while hi - lo > max(tol, 1e-13):
        m1 = hi - _GOLDEN * (hi - lo)
        m2 = lo + _GOLDEN * (hi - lo)
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    theta = 0.5 * (lo + hi)

    # Newton polish on f'(theta); quadratic convergence near the bracket.
    for _ in range(6):
        x = point(theta)
        xp = tuple(-r * math.sin(theta) * u + r * math.cos(theta) * v
                   for u, v in zip(e1, e2))
        xpp = tuple(-(xc - cc) for xc, cc in zip(x, c))
        da, db = geo.sub(x, a), geo.sub(x, b)
        la, lb = geo.norm(da), geo.norm(db)
        ua, ub = geo.scale(da, 1.0 / la), geo.scale(db, 1.0 / lb)
        g = geo.dot(xp, geo.add(ua, ub))
        h = (geo.dot(xpp, geo.add(ua, ub))
             + (geo.dot(xp, xp) - geo.dot(xp, ua) ** 2) / la
             + (geo.dot(xp, xp) - geo.dot(xp, ub) ** 2) / lb)
        if h <= 0.0 or abs(g) < 1e-15:
            break
        step = g / h
        if abs(step) > 2.0 * math.pi / grid:
            break
        theta -= step
    return point(theta)


# ---------------------------------------------------------------------------
# Chain machinery


class _Chain:
    """Reflection-point chain over sphere boundaries.

    mode 'periodic': cyclic neighbors, the wrap adds/subtracts the period
    displacement.  mode 'path': linear chain; entries of ``fixed`` are pinned.
    """

    def __init__(self, centers: Sequence[geo.Vec], radius: float, mode: str,
                 offset: Optional[geo.Vec] = None,
                 fixed: Sequence[bool] = ()):
        self.centers = [tuple(c) for c in centers]
        self.r = float(radius)
        self.mode = mode
        self.offset = tuple(offset) if offset is not None else None
        self.n = len(self.centers)
        if mode == "periodic" and self.offset is None:
            raise SolverError("periodic chain needs a period displacement")
        self.fixed = list(fixed) if fixed else [False] * self.n
        self.points: list[geo.Vec] = []
        self.length_trace: list[float] = []
        self.sweeps = 0

    # neighbor points (None when absent)
    def _prev(self, i: int) -> Optional[geo.Vec]:
        if i > 0:
            return self.points[i - 1]
        if self.mode == "periodic":
            return geo.sub(self.points[-1], self.offset)
        return None

    def _next(self, i: int) -> Optional[geo.Vec]:
        if i < self.n - 1:
            return self.points[i + 1]
        if self.mode == "periodic":
            return geo.add(self.points[0], self.offset)
        return None

    def _prev_anchor(self, i: int) -> Optional[geo.Vec]:
        if i > 0:
            return self.centers[i - 1]
        if self.mode == "periodic":
            return geo.sub(self.centers[-1], self.offset)
        return None

    def _next_anchor(self, i: int) -> Optional[geo.Vec]:
        if i < self.n - 1:
            return self.centers[i + 1]
        if self.mode == "periodic":
            return geo.add(self.centers[0], self.offset)
        return None

    def initialize(self, points: Optional[Sequence[geo.Vec]] = None) -> None:
        if points is not None:
            pts = []
            for c, x in zip(self.centers, points):
                d = geo.sub(tuple(x), c)
                if geo.norm(d) < 1e-12:
                    raise SolverError(f"initial point coincides with center {c}")
                pts.append(geo.add(c, geo.scale(geo.unit(d), self.r)))
            self.points = pts
            return
        self.points = [None] * self.n  # type: ignore[list-item]
        for i, c in enumerate(self.centers):
            if self.fixed[i]:
                continue
            a = self._prev_anchor(i)
            b = self._next_anchor(i)
            if a is None:
                a = b
            if b is None:
                b = a
            if geo.dist(a, b) < 1e-12:
                target = a
            else:
                d = geo.sub(b, a)
                t = geo.dot(geo.sub(c, a), d) / geo.dot(d, d)
                t = min(1.0, max(0.0, t))
                target = geo.add(a, geo.scale(d, t))
            direction = geo.sub(target, c)
            if geo.norm(direction) < 1e-9:
                direction = _orthonormal_pair(geo.unit(geo.sub(b, a)))
            self.points[i] = geo.add(c, geo.scale(geo.unit(direction), self.r))

    def set_fixed(self, i: int, x: geo.Vec) -> None:
        self.fixed[i] = True
        if not self.points:
            self.points = [None] * self.n  # type: ignore[list-item]
        self.points[i] = tuple(x)

    def total_length(self) -> float:
        total = 0.0
        for i in range(self.n):
            nxt = self._next(i)
            if nxt is not None:
                total += geo.dist(self.points[i], nxt)
        return total

    def sweep(self, inner_tol: float) -> float:
        """One Gauss-Seidel pass; returns the largest point movement.

        inner_tol is the angle tolerance handed to the per-sphere minimizer
        (slaved to a tenth of the caller's point tolerance).
        """
        before = self.total_length()
        moved = 0.0
        for i in range(self.n):
            if self.fixed[i]:
                continue
            new = _best_point_on_sphere(
                self._prev(i), self._next(i), self.centers[i], self.r, inner_tol
            )
            moved = max(moved, geo.dist(new, self.points[i]))
            self.points[i] = new
        after = self.total_length()
        if after > before + 1e-10 * (1.0 + before):
            raise InvariantError(
                f"descent length increased: {before!r} -> {after!r}"
            )
        self.length_trace.append(after)
        self.sweeps += 1
        return moved

    # -- Newton polish on the stationarity system ---------------------------

    def _variable_indices(self) -> list[int]:
        return [i for i in range(self.n) if not self.fixed[i]]

    def _stationarity(self, pts: list[geo.Vec], lam: np.ndarray):
        m = len(self.centers[0])
        var = self._variable_indices()
        pos = {i: k for k, i in enumerate(var)}
        nv = len(var)
        F = np.zeros(nv * m + nv)
        rows, cols, vals = [], [], []

        def add_block(rb, cb, mat):
            for a in range(m):
                for b in range(m):
                    rows.append(rb * m + a)
                    cols.append(cb * m + b)
                    vals.append(mat[a, b])

        saved = self.points
        self.points = pts
        try:
            for k, i in enumerate(var):
                x = np.array(pts[i])
                c = np.array(self.centers[i])
                grad = np.zeros(m)
                diag = 2.0 * lam[k] * np.eye(m)
                for neighbor, idx in ((self._prev(i), i - 1), (self._next(i), i + 1)):
                    if neighbor is None:
                        continue
                    d = x - np.array(neighbor)
                    ln = np.linalg.norm(d)
                    u = d / ln
                    grad += u
                    P = (np.eye(m) - np.outer(u, u)) / ln
                    diag += P
                    j = idx % self.n
                    if not self.fixed[j]:
                        add_block(k, pos[j], -P)
                nvec = x - c
                F[k * m:(k + 1) * m] = grad + 2.0 * lam[k] * nvec
                F[nv * m + k] = nvec @ nvec - self.r * self.r
                add_block(k, k, diag)
                for a in range(m):
                    rows.append(k * m + a)
                    cols.append(nv * m + k)
                    vals.append(2.0 * nvec[a])
                    rows.append(nv * m + k)
                    cols.append(k * m + a)
                    vals.append(2.0 * nvec[a])
        finally:
            self.points = saved
        size = nv * m + nv
        J = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
        return F, J

    def newton_polish(self, max_iter: int = 40) -> bool:
        m = len(self.centers[0])
        var = self._variable_indices()
        if not var:
            return True
        nv = len(var)
        pts = list(self.points)
        lam = np.zeros(nv)
        # consistent multiplier start: least-squares of the normal component
        for k, i in enumerate(var):
            x = np.array(pts[i])
            grad = np.zeros(m)
            for neighbor in (self._prev(i), self._next(i)):
                if neighbor is None:
                    continue
                d = x - np.array(neighbor)
                grad += d / np.linalg.norm(d)
            nvec = x - np.array(self.centers[i])
            lam[k] = -float(grad @ nvec) / (2.0 * float(nvec @ nvec))
        F, J = self._stationarity(pts, lam)
        res = float(np.linalg.norm(F, np.inf))
        for _ in range(max_iter):
            if res < 1e-13:
                break
            try:
                dz = scipy.sparse.linalg.spsolve(J.tocsc(), -F)
            except RuntimeError:
                return False
            if not np.all(np.isfinite(dz)):
                return False
            step = 1.0
            improved = False
            for _ in range(25):
                cand = list(pts)
                for k, i in enumerate(var):
                    cand[i] = tuple(
                        pts[i][a] + step * dz[k * m + a] for a in range(m)
                    )
                cand_lam = lam + step * dz[nv * m:]
                Fc, Jc = self._stationarity(cand, cand_lam)
                rc = float(np.linalg.norm(Fc, np.inf))
                if rc < res:
                    pts, lam, F, J, res = cand, cand_lam, Fc, Jc, rc
                    improved = True
                    break
                step *= 0.5
            if not improved:
                return False
        if res >= 1e-11:
            return False
        before = self.total_length()
        saved = self.points
        self.points = pts
        if self.total_length() > before + 1e-11 * (1.0 + before):
            self.points = saved
            return False
        return True

    # -- certification -------------------------------------------------------

    def reflection_residual(self) -> float:
        worst = 0.0
        for i in range(self.n):
            prev, nxt = self._prev(i), self._next(i)
            if prev is None or nxt is None:
                continue
            d_in = geo.unit(geo.sub(self.points[i], prev))
            d_out = geo.unit(geo.sub(nxt, self.points[i]))
            normal = geo.unit(geo.sub(self.points[i], self.centers[i]))
            worst = max(worst, geo.angle_between(
                geo.reflect_direction(d_in, normal), d_out
            ))
        return worst

    def boundary_error(self) -> float:
        return max(
            abs(geo.dist(x, c) - self.r)
            for i, (x, c) in enumerate(zip(self.points, self.centers))
            if not self.fixed[i]
        ) if any(not f for f in self.fixed) else 0.0


def _run_chain(chain: _Chain, tol: float, max_iters: int) -> int:
    """Descent to a loose tolerance, Newton to stationarity, final certify sweep."""
    switch = max(tol, 1e-5)
    movement = math.inf
    iters = 0
    while movement >= switch and iters < max_iters:
        movement = chain.sweep(switch / 10.0)
        iters += 1
    polished = chain.newton_polish()
    if not polished:
        while movement >= tol and iters < max_iters:
            movement = chain.sweep(tol / 10.0)
            iters += 1
    movement = chain.sweep(tol / 10.0)
    iters += 1
    if movement >= tol:
        raise SolverError(
            f"no convergence after {iters} sweeps: movement {movement:.3e}, "
            f"residual {chain.reflection_residual():.3e}"
        )
    return iters


def _certify(chain: _Chain, cfg: BilliardConfig,
             cells: Sequence[lattice.LatticeIndex]) -> float:
    residual = chain.reflection_residual()
    if residual > RESIDUAL_TOL:
        raise SolverError(
            f"converged point set violates the reflection law: {residual:.3e}"
        )
    berr = chain.boundary_error()
    if berr > BOUNDARY_TOL:
        raise SolverError(f"boundary membership error {berr:.3e}")
    _certify_clearance(chain, cfg, cells)
    return residual


def _certify_clearance(chain: _Chain, cfg: BilliardConfig,
                       cells: Sequence[lattice.LatticeIndex]) -> None:
    n = chain.n
    r = cfg.radius
    for i in range(n):
        nxt = chain._next(i)
        if nxt is None:
            continue
        a, b = chain.points[i], nxt
        cell_a = tuple(cells[i])
        if i < n - 1:
            cell_b = tuple(cells[i + 1])
        else:
            cell_b = tuple(
                int(round(c + o)) for c, o in zip(cells[0], chain.offset)
            )
        for cell in lattice.obstacle_cells_near_points(a, b, cfg, r + 0.5):
            if cell in (cell_a, cell_b):
                continue
            center = lattice.obstacle_center(cell, cfg)
            if geo.dist(a, b) < 1e-14:
                d = geo.dist(center, a)
            else:
                d = geo.point_segment_distance(center, a, b)
            if d < r - CLEARANCE_TOL:
                raise InvariantError(
                    f"segment {i} clears obstacle {cell} by only {d:.6f} < r"
                )


# ---------------------------------------------------------------------------
# Public operations


def solve_periodic_orbit(loop: gr.LoopSpec, cfg: BilliardConfig,
                         tol: float = 1e-10, max_iters: int = 100_000,
                         initial_points: Optional[Sequence[geo.Vec]] = None
                         ) -> PeriodicOrbit:
    """Minimal-length periodic broken line for a transition-graph loop."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    t = gr.loop_to_type(loop)
    if not gr.is_admissible(t, cfg):
        raise ConfigError(f"loop {loop.vertices} is not an admissible itinerary")
    cells, p = gr.loop_cells(loop)
    if cfg.geometry == lattice.SQUARE and any(c % 2 for c in p):
        raise InvariantError(f"square loop displacement {p} must be even")
    offset = tuple(float(c) for c in p)
    centers = [lattice.obstacle_center(k, cfg) for k in cells]
    chain = _Chain(centers, cfg.radius, "periodic", offset=offset)
    chain.initialize(initial_points)
    iters = _run_chain(chain, tol, max_iters)
    residual = _certify(chain, cfg, cells)
    length = chain.total_length()
    return PeriodicOrbit(
        cells=cells,
        displacement=offset,
        period=loop.period,
        points=tuple(chain.points),
        length=length,
        rotation_vector=tuple(c / length for c in offset),
        residual=residual,
        iterations=iters,
        length_trace=tuple(chain.length_trace),
        loop=loop,
    )


def solve_constrained_path(t: gr.AdmissibleType, x0: Sequence[float],
                           xs: Sequence[float], cfg: BilliardConfig,
                           tol: float = 1e-10, max_iters: int = 100_000
                           ) -> ConstrainedPath:
    """Shortest path of type t from x0 to xs (pinned on the end obstacles)."""
    if t.periodic:
        raise ConfigError("constrained paths take finite types")
    cells = t.cells
    x0, xs = geo.vec(x0), geo.vec(xs)
    c0 = lattice.obstacle_center(cells[0], cfg)
    cs = lattice.obstacle_center(cells[-1], cfg)
    for x, c, name in ((x0, c0, "x0"), (xs, cs, "xs")):
        if abs(geo.dist(x, c) - cfg.radius) > 1e-9:
            raise ConfigError(f"{name} must lie on its obstacle boundary")
    if len(cells) == 1:
        if geo.dist(x0, xs) < 1e-12:
            raise ConfigError("zero-length path: coincident endpoints on one obstacle")
        raise SolverError(
            "single-obstacle chords cross the obstacle; unsupported itinerary"
        )
    centers = [lattice.obstacle_center(k, cfg) for k in cells]
    chain = _Chain(centers, cfg.radius, "path")
    chain.initialize()
    chain.set_fixed(0, geo.add(c0, geo.scale(geo.unit(geo.sub(x0, c0)), cfg.radius)))
    chain.set_fixed(len(cells) - 1,
                    geo.add(cs, geo.scale(geo.unit(geo.sub(xs, cs)), cfg.radius)))
    iters = _run_chain(chain, tol, max_iters)
    for end, inner, center in ((0, 1, c0), (len(cells) - 1, len(cells) - 2, cs)):
        leave = geo.dot(geo.sub(chain.points[inner], chain.points[end]),
                        geo.sub(chain.points[end], center))
        if leave < -1e-12:
            raise SolverError(
                "path crosses its endpoint obstacle; crossing variants are "
                "out of scope"
            )
    residual = chain.reflection_residual()
    if residual > RESIDUAL_TOL:
        raise SolverError(f"reflection residual {residual:.3e} at convergence")
    if chain.boundary_error() > BOUNDARY_TOL:
        raise SolverError("boundary membership failed")
    _certify_path_clearance(chain, cfg, cells)
    return ConstrainedPath(
        cells=cells,
        points=tuple(chain.points),
        length=chain.total_length(),
        displacement=geo.sub(chain.points[-1], chain.points[0]),
        residual=residual,
        iterations=iters,
        length_trace=tuple(chain.length_trace),
    )


def _certify_path_clearance(chain: _Chain, cfg: BilliardConfig,
                            cells: Sequence[lattice.LatticeIndex]) -> None:
    r = cfg.radius
    for i in range(chain.n - 1):
        a, b = chain.points[i], chain.points[i + 1]
        excluded = (tuple(cells[i]), tuple(cells[i + 1]))
        for cell in lattice.obstacle_cells_near_points(a, b, cfg, r + 0.5):
            if cell in excluded:
                continue
            center = lattice.obstacle_center(cell, cfg)
            d = geo.point_segment_distance(center, a, b)
            if d < r - CLEARANCE_TOL:
                raise InvariantError(
                    f"segment {i} clears obstacle {cell} by only {d:.6f} < r"
                )


def solve_free_chain(cells: Sequence[lattice.LatticeIndex], cfg: BilliardConfig,
                     tol: float = 1e-8, max_iters: int = 100_000,
                     warm_points: Optional[Sequence[geo.Vec]] = None
                     ) -> ConstrainedPath:
    """Shortest path of a finite itinerary with both endpoints free.

    Realizes trajectory pieces for drift tracking; interior points obey the
    reflection law, end points slide to the nearest-boundary position.
    """
    cells = tuple(tuple(int(c) for c in k) for k in cells)
    centers = [lattice.obstacle_center(k, cfg) for k in cells]
    chain = _Chain(centers, cfg.radius, "path")
    chain.initialize(warm_points)
    iters = _run_chain(chain, tol, max_iters)
    residual = chain.reflection_residual()
    if residual > RESIDUAL_TOL:
        raise SolverError(f"reflection residual {residual:.3e} at convergence")
    _certify_path_clearance(chain, cfg, cells)
    return ConstrainedPath(
        cells=cells,
        points=tuple(chain.points),
        length=chain.total_length(),
        displacement=geo.sub(chain.points[-1], chain.points[0]),
        residual=residual,
        iterations=iters,
        length_trace=tuple(chain.length_trace),
    )


def orbit_rotation_vector(orbit: PeriodicOrbit) -> tuple[float, ...]:
    """Displacement over length: unit-speed flow means time equals arc length."""
    return tuple(c / orbit.length for c in orbit.displacement)
