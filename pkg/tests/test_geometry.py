import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from clarkekit.errors import InputError
from clarkekit.geometry import (
    Halfspace,
    Infeasible,
    LinearProgram,
    Optimum,
    Polyhedron,
    Q,
    Unbounded,
    convex_hull,
    double_description,
    fmt,
    lp_solve,
    primitive,
    sqrt_bounds,
    v_to_h,
)

from oracles import brute_facets, brute_lp_min, in_cone_float, scipy_lp_status
from strategies import int_vectors


def facet_set(p: Polyhedron):
    out = set()
    for h in p.facets:
        c = h.canonical()
        out.add((tuple(c.normal), c.offset))
    return out


class TestRationals:
    def test_parse_and_format(self):
        assert Q("3/6") == F(1, 2)
        assert fmt(F(-4, 6)) == "-2/3"
        assert fmt(2) == "2/1"

    @pytest.mark.parametrize("bad", [0.5, True, "x/2", None])
    def test_rejects_non_rationals(self, bad):
        with pytest.raises(InputError):
            Q(bad)

    @given(st.fractions(min_value=0, max_value=1000, max_denominator=50))
    def test_sqrt_bracket(self, q):
        lo, hi = sqrt_bounds(q, bits=20)
        assert lo * lo <= q <= hi * hi
        assert hi - lo <= F(1, 2**20)

    def test_halfspace_needs_nonzero_normal(self):
        with pytest.raises(InputError):
            Halfspace((0, 0), 1)


class TestLinearProgramming:
    def test_bounded_below(self):
        lp = LinearProgram((1,), [Halfspace((-1,), -1)])
        assert lp_solve(lp) == Optimum(F(1), (F(1),))

    def test_unbounded(self):
        assert isinstance(lp_solve(LinearProgram((1,), [Halfspace((1,), 0)])), Unbounded)

    def test_infeasible(self):
        lp = LinearProgram((1,), [Halfspace((-1,), -1), Halfspace((1,), 0)])
        assert isinstance(lp_solve(lp), Infeasible)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            LinearProgram((1, 0), [Halfspace((1,), 0)])

    def test_max_sense(self):
        lp = LinearProgram((1, 1), [Halfspace((1, 0), 2), Halfspace((0, 1), 3)], "max")
        r = lp_solve(lp)
        assert r.value == 5 and r.point == (2, 3)

    @given(st.data())
    def test_agrees_with_vertex_enumeration(self, data):
        n = data.draw(st.integers(1, 3))
        rows = data.draw(
            st.lists(st.tuples(int_vectors(n), st.integers(-3, 3)), min_size=0, max_size=6)
        )
        c = data.draw(int_vectors(n, nonzero=False))
        res = lp_solve(LinearProgram(c, [Halfspace(a, b) for a, b in rows]))
        status, val = scipy_lp_status(c, rows)
        if isinstance(res, Optimum):
            assert status == 0 and abs(float(res.value) - val) < 1e-7
            assert all(sum(F(x) * y for x, y in zip(a, res.point)) <= b for a, b in rows)
            brute = brute_lp_min(c, rows)
            if brute is not None:
                assert brute == res.value
        elif isinstance(res, Unbounded):
            assert status == 3
        else:
            assert status == 2


class TestConvexHull:
    def test_square(self):
        p = convex_hull([(1, 1), (1, -1), (-1, 1), (-1, -1)])
        assert facet_set(p) == {((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)}
        assert not p.equations

    def test_single_point_gives_equations(self):
        p = convex_hull([(0, 0)])
        assert not p.facets
        eq = {tuple(primitive(e.normal)) for e in p.equations}
        assert {tuple(abs(x) for x in e) for e in eq} == {(1, 0), (0, 1)}
        assert all(e.offset == 0 for e in p.equations)

    def test_triangle_matches_brute_force(self):
        pts = [(1, 0), (0, 1), (-1, -1)]
        assert facet_set(convex_hull(pts)) == brute_facets(pts)

    def test_segment_in_plane(self):
        p = convex_hull([(0, 0), (2, 2)])
        assert len(p.equations) == 1
        assert p.contains((1, 1)) and not p.contains((1, 0)) and not p.contains((3, 3))

    def test_empty_input(self):
        with pytest.raises(InputError):
            convex_hull([])

    def test_dimension_cap(self):
        with pytest.raises(InputError):
            convex_hull([(0,) * 7])

    @given(st.data())
    def test_full_dimensional_hulls_match_brute_force(self, data):
        n = data.draw(st.integers(2, 3))
        pts = data.draw(st.lists(int_vectors(n, nonzero=False), min_size=n + 1, max_size=7))
        p = convex_hull(pts)
        if p.equations:
            return
        assert facet_set(p) == brute_facets(pts)

    @given(st.data())
    def test_hull_is_idempotent(self, data):
        n = data.draw(st.integers(1, 3))
        pts = data.draw(st.lists(int_vectors(n, nonzero=False), min_size=1, max_size=7))
        p = convex_hull(pts)
        q = convex_hull(p.vertices)
        assert p.equals(q)
        assert facet_set(p) == facet_set(q)
        assert all(p.contains(x) for x in pts)


class TestDoubleDescription:
    def test_orthant(self):
        gens = double_description([Halfspace((-1, 0)), Halfspace((0, -1))])
        assert sorted(gens) == [(0, 1), (1, 0)]

    def test_line(self):
        gens = double_description([Halfspace((1, 0)), Halfspace((-1, 0))])
        assert sorted(gens) == [(0, -1), (0, 1)]

    def test_rejects_offsets(self):
        with pytest.raises(InputError):
            double_description([Halfspace((1, 0), 1)])

    def test_random_cone_membership_on_1000_rays(self):
        rng = random.Random(7)
        hs = [Halfspace(tuple(rng.randint(-3, 3) or 1 for _ in range(3))) for _ in range(5)]
        gens = double_description(hs, 3)
        for _ in range(1000):
            r = tuple(rng.randint(-5, 5) for _ in range(3))
            in_h = all(h.contains(r) for h in hs)
            assert in_h == in_cone_float([list(map(float, g)) for g in gens], r)

    @given(st.data())
    def test_round_trip_preserves_membership(self, data):
        n = data.draw(st.integers(1, 4))
        normals = data.draw(st.lists(int_vectors(n), min_size=0, max_size=6))
        hs = [Halfspace(a) for a in normals]
        gens = double_description(hs, n)
        back = v_to_h(gens, n)
        pts = data.draw(st.lists(int_vectors(n, -4, 4, nonzero=False), min_size=1, max_size=20))
        for x in pts:
            assert all(h.contains(x) for h in hs) == all(h.contains(x) for h in back)
