"""Finite directed graphs of admissible one-step transitions, and loops.

Torus vertices are the unobstructed lattice displacements j (no obstacle
between cell 0 and cell j); there is an edge j -> i when obstacle j does not
block the combined step 0 -> j+i.

Square vertices are pairs (parity, cell): the unfolding mixes reflections
with translations, so transitions depend on the parity class of the previous
cell.  An edge (i, j) -> (i', j') requires i' = parity(j) on top of the
betweenness condition.

A path in the graph corresponds to an itinerary of lattice cells via partial
sums of the per-vertex displacements; closed paths ("loops") correspond to
periodic itineraries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from . import lattice
from .errors import ConfigError, InvariantError
from .lattice import SQUARE, TORUS, BilliardConfig, LatticeIndex

TorusVertex = LatticeIndex
SquareVertex = tuple[tuple[int, int], tuple[int, int]]
Vertex = Union[TorusVertex, SquareVertex]

UNIT_PATH_LIMIT = 3  # longest connector the small-obstacle theory needs (torus)


def unit_vectors(m: int) -> list[LatticeIndex]:
    """The 2m signed coordinate vectors, in deterministic order."""
    out = []
    for axis in range(m):
        for sign in (1, -1):
            v = [0] * m
            v[axis] = sign
            out.append(tuple(v))
    return sorted(out)


def axis_neighborhood(m: int) -> list[LatticeIndex]:
    """{-1, 0, 1}^m minus the origin."""
    import itertools

    return [v for v in itertools.product((-1, 0, 1), repeat=m) if any(v)]


@dataclass(frozen=True)
class AdmissibleType:
    """Symbolic itinerary of lattice cells, optionally periodic.

    ``cells`` lists one period (k_0 = 0 first) for periodic types, in which
    case ``displacement`` p and ``period`` q extend it by k_{n+q} = k_n + p.
    """

    cells: tuple[LatticeIndex, ...]
    displacement: Optional[LatticeIndex] = None
    period: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(
            self, "cells", tuple(tuple(int(c) for c in k) for k in self.cells)
        )
        if (self.displacement is None) != (self.period is None):
            raise ConfigError("periodic types need both displacement and period")
        if self.displacement is not None:
            object.__setattr__(
                self, "displacement", tuple(int(c) for c in self.displacement)
            )
            if self.period != len(self.cells) or self.period < 1:
                raise ConfigError("period must equal the number of listed cells")

    @property
    def periodic(self) -> bool:
        return self.displacement is not None


@dataclass(frozen=True)
class LoopSpec:
    """Closed path in the transition graph with its net displacement."""

    vertices: tuple[Vertex, ...]
    displacement: LatticeIndex
    period: int

    @property
    def label(self) -> str:
        return json.dumps(self.vertices)


def displacement_of(v: Vertex) -> LatticeIndex:
    """Lattice step contributed by traversing vertex v."""
    if isinstance(v[0], tuple):
        i, j = v
        return tuple(a - b for a, b in zip(j, i))
    return v


def _vertex_sort_key(v: Vertex):
    return v


class _GraphBase:
    """Shared query surface for both graph flavors."""

    def __init__(self, cfg: BilliardConfig, max_norm: float,
                 vertices: Iterable[Vertex], edges: Iterable[tuple[Vertex, Vertex]]):
        self.cfg = cfg
        self.radius = cfg.radius
        self.max_norm = max_norm
        self.vertices = frozenset(vertices)
        self.edges = frozenset(edges)
        out: dict[Vertex, list[Vertex]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            out[a].append(b)
        self.out = {v: tuple(sorted(ns)) for v, ns in out.items()}
        self.sorted_vertices = tuple(sorted(self.vertices, key=_vertex_sort_key))

    def has_edge(self, a: Vertex, b: Vertex) -> bool:
        return (a, b) in self.edges

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        return self.out[v]

    def is_path(self, path: Sequence[Vertex]) -> bool:
        return all(self.has_edge(a, b) for a, b in zip(path, path[1:]))


class TorusGraph(_GraphBase):
    geometry = TORUS

    def __init__(self, cfg, max_norm, vertices, edges):
        super().__init__(cfg, max_norm, vertices, edges)
        # Vertices in the outermost unit shell hint that max_norm binds.
        self.outer_shell_vertices = tuple(
            sorted(v for v in self.vertices if math.sqrt(sum(c * c for c in v)) > max_norm - 1.0)
        )


class SquareGraph(_GraphBase):
    geometry = SQUARE

    def fiber(self, par: tuple[int, int]) -> set[LatticeIndex]:
        """Displacement set of the vertices whose base parity is par."""
        return {displacement_of(v) for v in self.vertices if v[0] == par}


def default_max_norm(r: float) -> float:
    return math.ceil(1.0 / (2.0 * r)) + 1.0


def is_torus_vertex(j: Sequence[int], cfg: BilliardConfig) -> bool:
    """True when no obstacle lies between cell 0 and cell j."""
    j = tuple(int(c) for c in j)
    if not any(j):
        return False
    origin = tuple(0 for _ in j)
    return not lattice.has_blocker(origin, j, cfg)


def is_square_vertex(par: tuple[int, int], j: Sequence[int], cfg: BilliardConfig) -> bool:
    j = tuple(int(c) for c in j)
    if j == par:
        return False
    return not lattice.has_blocker(par, j, cfg)


def _ball_points(m: int, max_norm: float) -> list[LatticeIndex]:
    import itertools

    bound = int(math.floor(max_norm))
    pts = []
    for p in itertools.product(range(-bound, bound + 1), repeat=m):
        if 0 < sum(c * c for c in p) <= max_norm * max_norm + 1e-9:
            pts.append(p)
    return sorted(pts)


def _edge_allowed(j_cell, i_cell, target_cell, cfg) -> bool:
    """Is obstacle j_cell not between obstacles i_cell and target_cell?

    Exact bounce-backs make i_cell == target_cell; is_between degenerates to
    a ball-ball test there, which small obstacles always pass.
    """
    return not lattice.is_between(j_cell, i_cell, target_cell, cfg)


def build_torus_graph(cfg: BilliardConfig, max_norm: Optional[float] = None) -> TorusGraph:
    """Vertex set {j : 0 < |j| <= max_norm, unobstructed} and its edges."""
    if cfg.geometry != TORUS:
        raise ConfigError("build_torus_graph requires torus geometry")
    if max_norm is None:
        max_norm = default_max_norm(cfg.radius)
    if max_norm < math.sqrt(cfg.dim):
        raise ConfigError(
            f"max_norm {max_norm} cannot contain the unit displacement set"
        )
    vertices = [j for j in _ball_points(cfg.dim, max_norm) if is_torus_vertex(j, cfg)]
    origin = tuple(0 for _ in range(cfg.dim))
    edges = []
    for j in vertices:
        for i in vertices:
            if i == j:
                continue  # j is the midpoint of [0, 2j]: never an edge
            target = tuple(a + b for a, b in zip(j, i))
            if _edge_allowed(j, origin, target, cfg):
                edges.append((j, i))
    g = TorusGraph(cfg, max_norm, vertices, edges)
    _audit_torus_graph(g)
    return g


def _audit_torus_graph(g: TorusGraph) -> None:
    for a, b in g.edges:
        if a == b:
            raise InvariantError(f"self-edge at {a}")
        if (b, a) not in g.edges:
            raise InvariantError(f"edge symmetry violated at {a} -> {b}")
    for v in g.vertices:
        if tuple(-c for c in v) not in g.vertices:
            raise InvariantError(f"vertex set not closed under negation: {v}")


def build_square_graph(cfg: BilliardConfig, max_norm: Optional[float] = None) -> SquareGraph:
    """Vertices (parity i, cell j) with no obstacle between O_i and O_j."""
    if cfg.geometry != SQUARE:
        raise ConfigError("build_square_graph requires square geometry")
    if max_norm is None:
        max_norm = default_max_norm(cfg.radius)
    if max_norm < math.sqrt(2):
        raise ConfigError(
            f"max_norm {max_norm} cannot contain the unit displacement set"
        )
    parities = [(0, 0), (0, 1), (1, 0), (1, 1)]
    vertices: list[SquareVertex] = []
    for par in parities:
        for d in _ball_points(2, max_norm):
            j = (par[0] + d[0], par[1] + d[1])
            if is_square_vertex(par, j, cfg):
                vertices.append((par, j))
    edges = []
    by_parity: dict[tuple[int, int], list[SquareVertex]] = {p: [] for p in parities}
    for v in vertices:
        by_parity[v[0]].append(v)
    for a in vertices:
        i, j = a
        for b in by_parity[lattice.parity(j)]:
            i2, j2 = b
            target = tuple(x + y - z for x, y, z in zip(j, j2, i2))
            if target == j:
                continue
            if _edge_allowed(j, i, target, cfg):
                edges.append((a, b))
    g = SquareGraph(cfg, max_norm, vertices, edges)
    for (i, j), (i2, j2) in g.edges:
        if lattice.parity(j) != i2:
            raise InvariantError(f"edge parity broken: {(i, j)} -> {(i2, j2)}")
    return g


def build_graph(cfg: BilliardConfig, max_norm: Optional[float] = None):
    if cfg.geometry == TORUS:
        return build_torus_graph(cfg, max_norm)
    return build_square_graph(cfg, max_norm)


# ---------------------------------------------------------------------------
# Itineraries <-> paths


def is_admissible(t: AdmissibleType, cfg: BilliardConfig) -> bool:
    """Check the itinerary conditions directly against the obstacle layout.

    Finite types check every consecutive pair and triple; periodic types wrap
    using k_q = k_0 + p and k_{q+1} = k_1 + p.
    """
    cells = list(t.cells)
    if not cells:
        raise ConfigError("empty itinerary")
    if any(cells[0]):
        raise ConfigError(f"itinerary must start at the origin cell, got {cells[0]}")
    if t.periodic:
        p, q = t.displacement, t.period
        # Two wrap cells (k_q and k_{q+1}) cover every pair and triple window.
        for idx in (q, q + 1):
            base, shift = t.cells[idx % q], idx // q
            cells.append(tuple(a + shift * b for a, b in zip(base, p)))
    for a, b in zip(cells, cells[1:]):
        if a == b:
            return False
        if lattice.has_blocker(a, b, cfg):
            return False
    for a, b, c in zip(cells, cells[1:], cells[2:]):
        if lattice.is_between(b, a, c, cfg):
            return False
    return True


def path_to_type(path: Sequence[Vertex], cfg: BilliardConfig) -> AdmissibleType:
    """Cells visited by a graph path: partial sums of vertex displacements."""
    if not path:
        raise ConfigError("empty path")
    if cfg.geometry == SQUARE and path[0][0] != (0, 0):
        raise ConfigError(
            "square paths must start on the even-parity fiber to describe an "
            f"itinerary from cell (0, 0); got base parity {path[0][0]}"
        )
    m = cfg.dim
    cells = [tuple(0 for _ in range(m))]
    for v in path:
        d = displacement_of(v)
        cells.append(tuple(a + b for a, b in zip(cells[-1], d)))
    return AdmissibleType(cells=tuple(cells))


def type_to_path(t: AdmissibleType, cfg: BilliardConfig) -> list[Vertex]:
    """Inverse of path_to_type on its range."""
    steps = [
        tuple(b - a for a, b in zip(x, y)) for x, y in zip(t.cells, t.cells[1:])
    ]
    if cfg.geometry == TORUS:
        return steps
    path = []
    for k, step in zip(t.cells, steps):
        par = lattice.parity(k)
        path.append((par, tuple(a + b for a, b in zip(par, step))))
    return path


def loop_cells(loop: LoopSpec) -> tuple[tuple[LatticeIndex, ...], LatticeIndex]:
    """One period of reflection cells (k_0 = 0 first) and the displacement p."""
    m = len(displacement_of(loop.vertices[0]))
    cells = [tuple(0 for _ in range(m))]
    for v in loop.vertices[:-1]:
        d = displacement_of(v)
        cells.append(tuple(a + b for a, b in zip(cells[-1], d)))
    return tuple(cells), loop.displacement


def loop_to_type(loop: LoopSpec) -> AdmissibleType:
    cells, p = loop_cells(loop)
    return AdmissibleType(cells=cells, displacement=p, period=loop.period)


def make_loop(vertices: Sequence[Vertex]) -> LoopSpec:
    vertices = tuple(vertices)
    disp = tuple(
        sum(displacement_of(v)[d] for v in vertices)
        for d in range(len(displacement_of(vertices[0])))
    )
    return LoopSpec(vertices=vertices, displacement=disp, period=len(vertices))


# ---------------------------------------------------------------------------
# Connectors through unit vectors


def _unit_toward(k: LatticeIndex) -> LatticeIndex:
    """Unit vector u with <k, u> <= 0; picks the largest component of k."""
    axis = max(range(len(k)), key=lambda d: (abs(k[d]), -d))
    u = [0] * len(k)
    u[axis] = -1 if k[axis] > 0 else 1
    return tuple(u)


def connect_via_unit(a: TorusVertex, b: TorusVertex, g: TorusGraph) -> list[TorusVertex]:
    """Path a -> ... -> b of length <= 3 whose interior vertices are units.

    Construction: u with <a, u> <= 0 gives the edge a -> u; v with
    <b, v> <= 0 gives v -> b; distinct units always connect to each other.
    """
    if a not in g.vertices or b not in g.vertices:
        raise ConfigError(f"connect_via_unit needs graph vertices, got {a}, {b}")
    u = _unit_toward(a)
    v = _unit_toward(b)
    path = [a, u, b] if u == v else [a, u, v, b]
    if not g.is_path(path):
        raise InvariantError(f"unit connector {path} is not a graph path")
    return path


def connect_in_square(a: SquareVertex, b: SquareVertex, g: SquareGraph,
                      limit: int = 6) -> list[SquareVertex]:
    """Shortest path a -> ... -> b through unit-displacement vertices.

    The square graph constrains interior parities, so the connector length
    depends on the parity gap; breadth-first search over the finite set of
    unit vertices keeps it minimal and deterministic.
    """
    if a not in g.vertices or b not in g.vertices:
        raise ConfigError(f"connector endpoints must be graph vertices: {a}, {b}")
    units = {
        v for v in g.vertices
        if tuple(abs(c) for c in displacement_of(v)) in ((0, 1), (1, 0))
    }
    frontier = [(a,)]
    seen = {a}
    for _ in range(limit):
        nxt = []
        for path in frontier:
            for n in g.neighbors(path[-1]):
                if n == b:
                    return list(path) + [b]
                if n in units and n not in seen:
                    seen.add(n)
                    nxt.append(path + (n,))
        frontier = sorted(nxt)
    raise InvariantError(f"no unit connector of length <= {limit} from {a} to {b}")


def connect(a: Vertex, b: Vertex, g) -> list[Vertex]:
    if g.geometry == TORUS:
        return connect_via_unit(a, b, g)
    return connect_in_square(a, b, g)


# ---------------------------------------------------------------------------
# Loop enumeration


def _even_fiber_rotation(seq: tuple[Vertex, ...]) -> Optional[tuple[Vertex, ...]]:
    """Rotate a square cycle to start on the even-parity fiber, if it can.

    Only such rotations describe periodic itineraries starting at cell 0;
    cycles that never touch the (0, 0) fiber are skipped.
    """
    starts = [n for n, v in enumerate(seq) if v[0] == (0, 0)]
    if not starts:
        return None
    rots = [seq[s:] + seq[:s] for s in starts]
    return min(rots)


def enumerate_loops(g, max_len: int, budget: int) -> list[LoopSpec]:
    """Simple cycles of length <= max_len, one representative per rotation.

    Cycles are produced in lexicographic order of their canonical vertex
    sequence (smallest vertex first) and truncated at ``budget``.
    """
    if max_len < 2:
        raise ConfigError("loops need max_len >= 2 (no self-edges exist)")
    order = {v: n for n, v in enumerate(g.sorted_vertices)}
    loops: list[LoopSpec] = []

    def emit(seq: tuple[Vertex, ...]) -> bool:
        if g.geometry == SQUARE:
            rotated = _even_fiber_rotation(seq)
            if rotated is None:
                return False
            seq = rotated
        loops.append(make_loop(seq))
        return True

    for start in g.sorted_vertices:
        if len(loops) >= budget:
            break
        stack = [(start,)]
        while stack:
            path = stack.pop()
            head = path[-1]
            extensions = []
            for n in g.neighbors(head):
                if n == start and len(path) >= 2:
                    if emit(path) and len(loops) >= budget:
                        return loops
                elif order[n] > order[start] and n not in path and len(path) < max_len:
                    extensions.append(path + (n,))
            stack.extend(reversed(extensions))
    return loops


def splice_through_vertex(loop: LoopSpec, hub: Vertex, g, reps: int = 1) -> LoopSpec:
    """Loop through ``hub`` containing ``reps`` copies of the given loop.

    Connectors run through unit vertices on both sides, so any family of
    spliced loops concatenates freely at the hub.
    """
    body = loop.vertices * reps
    into = connect(hub, body[0], g)
    back = connect(body[-1], hub, g)
    vertices = tuple(into[:-1]) + body + tuple(back[1:-1])
    spliced = make_loop(vertices)
    seq = spliced.vertices
    for a, b in zip(seq, seq[1:] + seq[:1]):
        if not g.has_edge(a, b):
            raise InvariantError(f"spliced loop breaks at {a} -> {b}")
    return spliced


def concatenate_loop_path(counts: Sequence[tuple[LoopSpec, int]]) -> list[Vertex]:
    """Vertex path of a concatenation of hub loops (repetition counts)."""
    path: list[Vertex] = []
    for loop, n in counts:
        path.extend(list(loop.vertices) * n)
    return path


# ---------------------------------------------------------------------------
# Export


def graph_to_dict(g) -> dict:
    if g.geometry == TORUS:
        verts = [list(v) for v in g.sorted_vertices]
        edges = sorted([list(a), list(b)] for a, b in g.edges)
    else:
        verts = [[list(v[0]), list(v[1])] for v in g.sorted_vertices]
        edges = sorted(
            [[list(a[0]), list(a[1])], [list(b[0]), list(b[1])]] for a, b in g.edges
        )
    doc = {
        "geometry": g.geometry,
        "radius": g.radius,
        "max_norm": g.max_norm,
        "vertices": verts,
        "edges": edges,
    }
    if g.geometry == TORUS:
        doc["outer_shell_vertices"] = [list(v) for v in g.outer_shell_vertices]
    return doc
