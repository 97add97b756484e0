import itertools
import math
import random

import pytest

from obstacle_billiards import graph as gr
from obstacle_billiards.errors import ConfigError
from obstacle_billiards.lattice import BilliardConfig

import oracles


def torus(r, m=2):
    return BilliardConfig(geometry="torus", dim=m, radius=r)


def square(r, center=(0.0, 0.0)):
    return BilliardConfig(geometry="square", dim=2, radius=r, center=center)


@pytest.fixture(scope="module")
def g02():
    return gr.build_torus_graph(torus(0.2))


@pytest.fixture(scope="module")
def sq02():
    return gr.build_square_graph(square(0.2))


class TestTorusVertices:
    def test_units_always_vertices(self, g02):
        for u in gr.unit_vectors(2):
            assert u in g02.vertices

    def test_multiples_blocked(self, g02):
        assert (2, 0) not in g02.vertices

    def test_vertex_straddles_radius(self):
        assert (2, 1) in gr.build_torus_graph(torus(0.2)).vertices
        assert (2, 1) not in gr.build_torus_graph(torus(0.23)).vertices

    def test_axis_neighborhood_in_vertices_across_radii(self):
        # Holds for every small obstacle, both dimensions.
        for m in (2, 3):
            for r in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35):
                cfg = torus(r, m)
                for v in gr.axis_neighborhood(m):
                    assert gr.is_torus_vertex(v, cfg), (m, r, v)

    def test_max_norm_gate(self):
        with pytest.raises(ConfigError):
            gr.build_torus_graph(torus(0.2), max_norm=1.0)

    def test_signed_permutation_invariance(self, g02):
        rng = random.Random(5)
        for _ in range(20):
            perm = rng.sample(range(2), 2)
            signs = [rng.choice((-1, 1)) for _ in range(2)]
            mapped = {
                tuple(signs[d] * v[perm[d]] for d in range(2)) for v in g02.vertices
            }
            assert mapped == set(g02.vertices)


class TestTorusEdges:
    def test_no_self_edges(self, g02):
        assert all(a != b for a, b in g02.edges)

    def test_edge_symmetry(self, g02):
        for a, b in g02.edges:
            assert (b, a) in g02.edges

    def test_negation_symmetry(self, g02):
        for a, b in g02.edges:
            na, nb = tuple(-c for c in a), tuple(-c for c in b)
            assert (nb, na) in g02.edges

    def test_reversal_edge_exists(self, g02):
        for v in g02.vertices:
            assert g02.has_edge(v, tuple(-c for c in v))

    def test_nonpositive_scalar_product_edges(self, g02):
        for a in g02.vertices:
            for b in g02.vertices:
                if a == b:
                    continue
                if sum(x * y for x, y in zip(a, b)) <= 0:
                    assert g02.has_edge(a, b) and g02.has_edge(b, a)

    def test_collinear_continuation_blocked(self, g02):
        assert not g02.has_edge((1, 0), (1, 0))


class TestBruteForceEquivalence:
    # max_norm trimmed for the large m=3 windows to keep the scan honest but fast
    CASES = [
        (2, 0.05, None),
        (2, 0.1, None),
        (2, 0.2, None),
        (3, 0.2, None),
        (3, 0.1, 4.0),
        (3, 0.05, 3.0),
    ]

    @pytest.mark.parametrize("m,r,max_norm", CASES)
    def test_torus_graph_matches_oracle(self, m, r, max_norm):
        cfg = torus(r, m)
        g = gr.build_torus_graph(cfg, max_norm)
        vertices, edges = oracles.torus_graph_brute(cfg, g.max_norm)
        assert set(g.vertices) == vertices
        assert set(g.edges) == edges

    def test_square_graph_matches_oracle(self):
        for r, center in [(0.2, (0.0, 0.0)), (0.2, (0.05, 0.0)), (0.1, (0.03, -0.04))]:
            cfg = square(r, center)
            g = gr.build_square_graph(cfg)
            vertices, edges = oracles.square_graph_brute(cfg, g.max_norm)
            assert set(g.vertices) == vertices
            assert set(g.edges) == edges


class TestSquareGraph:
    def test_edge_parity_condition(self, sq02):
        from obstacle_billiards.lattice import parity

        for (i, j), (i2, j2) in sq02.edges:
            assert parity(j) == i2

    def test_centered_obstacle_fibers_match_torus(self, sq02, g02):
        tv = set(g02.vertices)
        for par in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            assert sq02.fiber(par) == tv

    def test_centered_obstacle_edges_match_torus(self, sq02, g02):
        # Each square edge projects to a torus edge on displacements.
        for a, b in sq02.edges:
            da, db = gr.displacement_of(a), gr.displacement_of(b)
            assert g02.has_edge(da, db)

    def test_off_center_vertex_example(self):
        g = gr.build_square_graph(square(0.2, (0.05, 0.0)))
        assert ((0, 0), (1, 1)) in g.vertices


class TestAdmissibility:
    def test_bounce_itinerary(self):
        t = gr.AdmissibleType(cells=((0, 0), (1, 0), (0, 0)))
        assert gr.is_admissible(t, torus(0.2))

    def test_collinear_midpoint_rejected(self):
        t = gr.AdmissibleType(cells=((0, 0), (1, 0), (2, 0)))
        assert not gr.is_admissible(t, torus(0.2))

    def test_blocked_step_rejected(self):
        t = gr.AdmissibleType(cells=((0, 0), (2, 0)))
        assert not gr.is_admissible(t, torus(0.2))

    def test_periodic_wrap_conditions(self):
        cfg = torus(0.2)
        good = gr.AdmissibleType(
            cells=((0, 0), (1, 1)), displacement=(2, 0), period=2
        )
        assert gr.is_admissible(good, cfg)
        # Drifting straight through the next period's first obstacle fails.
        bad = gr.AdmissibleType(cells=((0, 0),), displacement=(1, 0), period=1)
        assert not gr.is_admissible(bad, cfg)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            gr.is_admissible(gr.AdmissibleType(cells=()), torus(0.2))

    def test_path_equivalence_exhaustive(self, g02):
        # Finite sequences pass is_admissible iff their steps form a graph
        # path, for all paths of length <= 5 over vertices of norm <= sqrt(5).
        cfg = torus(0.2)
        short = [v for v in g02.sorted_vertices if v[0] ** 2 + v[1] ** 2 <= 5]

        def cells_of(steps):
            cells = [(0, 0)]
            for s in steps:
                cells.append((cells[-1][0] + s[0], cells[-1][1] + s[1]))
            return tuple(cells)

        count = 0
        for n in (1, 2, 3):
            for steps in itertools.product(short, repeat=n):
                t = gr.AdmissibleType(cells=cells_of(steps))
                assert gr.is_admissible(t, cfg) == g02.is_path(list(steps))
                count += 1
        # longer paths sampled from walks plus random perturbations
        rng = random.Random(11)
        for _ in range(400, 400 + 200):
            steps = [rng.choice(short)]
            for _ in range(4):
                steps.append(rng.choice(g02.neighbors(steps[-1])))
            t = gr.AdmissibleType(cells=cells_of(steps))
            assert gr.is_admissible(t, cfg) == g02.is_path(steps)
            steps[rng.randrange(len(steps))] = rng.choice(short)
            t = gr.AdmissibleType(cells=cells_of(steps))
            assert gr.is_admissible(t, cfg) == g02.is_path(steps)


class TestPathTypeRoundTrip:
    def test_partial_sums_torus(self):
        t = gr.path_to_type([(1, 0), (-1, 0)], torus(0.2))
        assert t.cells == ((0, 0), (1, 0), (0, 0))
        t = gr.path_to_type([(1, 1), (1, -1)], torus(0.2))
        assert t.cells == ((0, 0), (1, 1), (2, 0))

    def test_round_trip_random_paths(self, g02):
        cfg = torus(0.2)
        rng = random.Random(3)
        for _ in range(100):
            path = [rng.choice(g02.sorted_vertices)]
            for _ in range(rng.randrange(1, 12)):
                path.append(rng.choice(g02.neighbors(path[-1])))
            assert gr.type_to_path(gr.path_to_type(path, cfg), cfg) == path

    def test_round_trip_square(self, sq02):
        cfg = square(0.2)
        rng = random.Random(4)
        starts = [v for v in sq02.sorted_vertices if v[0] == (0, 0)]
        for _ in range(100):
            path = [rng.choice(starts)]
            for _ in range(rng.randrange(1, 10)):
                path.append(rng.choice(sq02.neighbors(path[-1])))
            assert gr.type_to_path(gr.path_to_type(path, cfg), cfg) == path


class TestConnectViaUnit:
    def test_same_vertex_length_two(self, g02):
        path = gr.connect_via_unit((1, 0), (1, 0), g02)
        assert path == [(1, 0), (-1, 0), (1, 0)]

    def test_diagonal_pair_length_three(self, g02):
        path = gr.connect_via_unit((1, 1), (-1, 1), g02)
        assert len(path) - 1 <= 3
        assert all(v in gr.unit_vectors(2) for v in path[1:-1])
        assert g02.is_path(path)

    def test_unit_loop(self, g02):
        path = gr.connect_via_unit((0, 1), (0, 1), g02)
        assert path == [(0, 1), (0, -1), (0, 1)]

    def test_all_ordered_pairs_all_graphs(self):
        for m, r in [(2, 0.2), (2, 0.1), (3, 0.2)]:
            g = gr.build_torus_graph(torus(r, m))
            units = set(gr.unit_vectors(m))
            for a in g.sorted_vertices:
                for b in g.sorted_vertices:
                    path = gr.connect_via_unit(a, b, g)
                    assert len(path) - 1 <= gr.UNIT_PATH_LIMIT
                    assert all(v in units for v in path[1:-1])
                    assert g.is_path(path)


class TestEnumerateLoops:
    def test_bounce_loop_present(self, g02):
        loops = gr.enumerate_loops(g02, max_len=2, budget=10_000)
        specs = {l.vertices for l in loops}
        assert ((-1, 0), (1, 0)) in specs
        bounce = next(l for l in loops if l.vertices == ((-1, 0), (1, 0)))
        assert bounce.displacement == (0, 0) and bounce.period == 2

    def test_drift_loop_present(self, g02):
        loops = gr.enumerate_loops(g02, max_len=2, budget=10_000)
        drift = next(l for l in loops if set(l.vertices) == {(1, 1), (1, -1)})
        assert drift.displacement == (2, 0) and drift.period == 2

    def test_reversal_loop_on_long_vertex(self, g02):
        loops = gr.enumerate_loops(g02, max_len=2, budget=10_000)
        assert any(set(l.vertices) == {(2, 1), (-2, -1)} for l in loops)

    def test_deterministic_and_budgeted(self, g02):
        a = gr.enumerate_loops(g02, max_len=3, budget=50)
        b = gr.enumerate_loops(g02, max_len=3, budget=50)
        assert a == b and len(a) == 50
        full = gr.enumerate_loops(g02, max_len=3, budget=10**9)
        assert a == full[:50]

    def test_loops_are_admissible_types(self, g02):
        cfg = torus(0.2)
        for loop in gr.enumerate_loops(g02, max_len=3, budget=200):
            assert gr.is_admissible(gr.loop_to_type(loop), cfg)

    def test_square_loops_start_even_and_close(self, sq02):
        cfg = square(0.2)
        loops = gr.enumerate_loops(sq02, max_len=3, budget=300)
        assert loops
        for loop in loops:
            assert loop.vertices[0][0] == (0, 0)
            assert all(c % 2 == 0 for c in loop.displacement)
            assert gr.is_admissible(gr.loop_to_type(loop), cfg)


class TestSplice:
    def test_spliced_loop_runs_through_hub(self, g02):
        base = gr.make_loop(((1, 1), (1, -1)))
        spliced = gr.splice_through_vertex(base, (1, 0), g02, reps=3)
        assert spliced.vertices[0] == (1, 0)
        assert spliced.vertices.count((1, 1)) == 3
        # displacement is the base drift plus the connector drift
        assert gr.is_admissible(gr.loop_to_type(spliced), torus(0.2))
