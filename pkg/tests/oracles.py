"""Independent brute-force reference implementations used by the tests.

These deliberately avoid the package's candidate enumeration and distance
helpers: distances come from an explicit projection formula, and windows are
scanned exhaustively.
"""

import itertools
import math


def _center(cell, cfg):
    if cfg.geometry == "torus":
        return tuple(float(c) for c in cell)
    p, q = cell
    cx, cy = cfg.center
    return (p + (cx if p % 2 == 0 else -cx), q + (cy if q % 2 == 0 else -cy))


def _seg_dist(p, a, b):
    ab = [y - x for x, y in zip(a, b)]
    ap = [y - x for x, y in zip(a, p)]
    denom = sum(c * c for c in ab)
    t = sum(x * y for x, y in zip(ap, ab)) / denom
    t = min(1.0, max(0.0, t))
    q = [x + t * y for x, y in zip(a, ab)]
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(p, q)))


def blocked(i, j, cfg, window=None):
    """Does any obstacle meet the capsule between obstacles i and j?"""
    ci, cj = _center(i, cfg), _center(j, cfg)
    m = cfg.dim
    if window is None:
        lo = [math.floor(min(ci[d], cj[d])) - 2 for d in range(m)]
        hi = [math.ceil(max(ci[d], cj[d])) + 2 for d in range(m)]
        window = itertools.product(*(range(lo[d], hi[d] + 1) for d in range(m)))
    for k in window:
        if k == tuple(i) or k == tuple(j):
            continue
        if _seg_dist(_center(k, cfg), ci, cj) <= 2 * cfg.radius + 1e-12:
            return True
    return False


def torus_graph_brute(cfg, max_norm):
    """Vertex and edge sets by exhaustive double scan over the window."""
    m = cfg.dim
    bound = int(math.floor(max_norm))
    zero = tuple(0 for _ in range(m))
    cells = [
        c
        for c in itertools.product(range(-bound, bound + 1), repeat=m)
        if 0 < sum(x * x for x in c) <= max_norm * max_norm + 1e-9
    ]
    vertices = {c for c in cells if not blocked(zero, c, cfg)}
    edges = set()
    for j in vertices:
        for i in vertices:
            if i == j:
                continue
            target = tuple(a + b for a, b in zip(j, i))
            if target == zero:
                hit = math.sqrt(sum(c * c for c in _center(j, cfg)))
                if hit > 2 * cfg.radius + 1e-12:
                    edges.add((j, i))
                continue
            if _seg_dist(_center(j, cfg), _center(zero, cfg), _center(target, cfg)) \
                    > 2 * cfg.radius + 1e-12:
                edges.add((j, i))
    return vertices, edges


def square_graph_brute(cfg, max_norm):
    parities = [(0, 0), (0, 1), (1, 0), (1, 1)]
    bound = int(math.floor(max_norm))
    vertices = set()
    for par in parities:
        for d in itertools.product(range(-bound, bound + 1), repeat=2):
            if not 0 < d[0] * d[0] + d[1] * d[1] <= max_norm * max_norm + 1e-9:
                continue
            j = (par[0] + d[0], par[1] + d[1])
            if not blocked(par, j, cfg):
                vertices.add((par, j))
    edges = set()
    for (i, j) in vertices:
        pj = (j[0] % 2, j[1] % 2)
        for (i2, j2) in vertices:
            if i2 != pj:
                continue
            target = tuple(a + b - c for a, b, c in zip(j, j2, i2))
            cj, ct = _center(j, cfg), _center(target, cfg)
            ci = _center(i, cfg)
            if target == i:
                ok = math.sqrt(sum((a - b) ** 2 for a, b in zip(cj, ci))) \
                    > 2 * cfg.radius + 1e-12
            else:
                ok = _seg_dist(cj, ci, ct) > 2 * cfg.radius + 1e-12
            if ok:
                edges.add(((i, j), (i2, j2)))
    return vertices, edges
