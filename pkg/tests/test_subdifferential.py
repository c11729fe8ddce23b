import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from clarkekit.errors import InputError, PointOutsideDomain
from clarkekit.geometry import Halfspace
from clarkekit.subdifferential import (
    PWAFunction,
    clarke_subdifferential,
    epigraph_lift,
    intermediate_inclusion_check,
    local_epigraph,
    singular_qualification,
    sum_rule_check,
)

from oracles import gradient_hull_1d
from strategies import int_vectors

ABS = PWAFunction.abs()
NEGABS = PWAFunction.neg_max([((1,), 0), ((-1,), 0)])
ZERO1 = PWAFunction.max_affine([((0,), 0)])


def interval(s):
    vals = sorted(v[0] for v in s.polytope)
    return vals[0], vals[-1]


def sampled_gradients(f, n, radius=F(1, 1000), count=720, seed=0):
    """Exact gradients at points near 0, by a difference quotient at a tiny step.

    Near 0 the function is linear on cones, so a point a fixed distance into a
    cone and a step far smaller than that distance give the exact gradient.
    """
    rng = random.Random(seed)
    h = F(1, 10**9)
    out = set()
    for k in range(count):
        if n == 1:
            x = (radius if k % 2 else -radius,)
        else:
            t = 2 * math.pi * (k + rng.random() / 2) / count
            x = (F(math.cos(t)).limit_denominator(10**6) * radius,
                 F(math.sin(t)).limit_denominator(10**6) * radius)
        fx = f.value(x)
        g = []
        for i in range(n):
            y = tuple(xj + (h if j == i else 0) for j, xj in enumerate(x))
            g.append((f.value(y) - fx) / h)
        out.add(tuple(g))
    return out


def in_hull_float(points, target):
    P = np.array(points, float).T
    k = P.shape[1]
    A = np.vstack([P, np.ones(k)])
    b = np.concatenate([np.array(target, float), [1.0]])
    res = linprog(np.zeros(k), A_eq=A, b_eq=b, bounds=[(0, None)] * k, method="highs")
    return res.status == 0


@st.composite
def lipschitz_pwa(draw, n):
    pieces = draw(st.lists(st.tuples(int_vectors(n, -2, 2, nonzero=False), st.sampled_from([0, 0, 1])),
                           min_size=1, max_size=3))
    pieces[0] = (pieces[0][0], 0)
    if draw(st.booleans()):
        return PWAFunction.max_affine(pieces)
    return PWAFunction.neg_max(pieces)


class TestFunctions:
    def test_values(self):
        assert ABS.value((F(-3),)) == 3
        assert NEGABS.value((F(2),)) == -2

    def test_domain(self):
        f = PWAFunction.indicator([Halfspace((-1,), 0)])
        assert f.value((1,)) == 0 and f.value((-1,)) is None

    def test_sum_and_scale(self):
        g = ABS + NEGABS
        assert all(g.value((F(x),)) == 0 for x in range(-3, 4))
        assert ABS.scaled(2).value((F(-1),)) == 2
        with pytest.raises(InputError):
            ABS.scaled(0)

    def test_json_round_trip(self):
        for f in (ABS, NEGABS, ABS + NEGABS):
            back = PWAFunction.from_json(f.to_json())
            assert all(back.value((F(x, 3),)) == f.value((F(x, 3),)) for x in range(-6, 7))

    def test_bad_json(self):
        with pytest.raises(InputError):
            PWAFunction.from_json({"type": "spline"})
        with pytest.raises(InputError):
            PWAFunction.from_json({"type": "max"})

    def test_outside_domain(self):
        f = PWAFunction.indicator([Halfspace((-1,), 0)])
        with pytest.raises(PointOutsideDomain):
            clarke_subdifferential(f, (-1,))

    def test_local_epigraph_basepoint(self):
        u = local_epigraph(ABS, (F(2),))
        assert u.basepoint == (2, 2) and len(u.pieces) == 1


class TestSubdifferential:
    def test_abs(self):
        assert interval(clarke_subdifferential(ABS, (0,))) == (-1, 1)

    def test_negative_abs(self):
        assert interval(clarke_subdifferential(NEGABS, (0,))) == (-1, 1)

    def test_max_of_lines(self):
        f = PWAFunction.max_affine([((1,), 0), ((2,), 0)])
        assert interval(clarke_subdifferential(f, (0,))) == (1, 2)

    def test_smooth_point(self):
        s = clarke_subdifferential(ABS, (F(1, 2),))
        assert s.polytope == [(1,)] and s.singular_cone.is_zero

    def test_indicator_singular_cone(self):
        f = PWAFunction.indicator([Halfspace((-1,), 0)])
        s = clarke_subdifferential(f, (0,))
        assert s.contains((-5,)) and not s.contains((1,))
        assert s.singular_cone.contains((-1,)) and not s.singular_cone.contains((1,))

    def test_one_dimensional_against_numeric_derivatives(self):
        for f in (ABS, NEGABS, ABS + NEGABS, ABS.scaled(3) + NEGABS):
            lo, hi = gradient_hull_1d(lambda x: float(f.value((F(x),))))
            a, b = interval(clarke_subdifferential(f, (0,)))
            assert abs(float(a) - lo) < 1e-6 and abs(float(b) - hi) < 1e-6

    @settings(max_examples=25)
    @given(st.data())
    def test_gradient_formula(self, data):
        # the Clarke subdifferential is the hull of nearby gradients
        n = data.draw(st.integers(1, 2))
        f = data.draw(lipschitz_pwa(n))
        s = clarke_subdifferential(f, (0,) * n)
        assert s.singular_cone.is_zero
        grads = sampled_gradients(f, n)
        for g in grads:
            assert s.contains(g)
        for v in s.polytope:
            assert in_hull_float(list(grads), v)


class TestQualification:
    def test_opposing_indicators_fail(self):
        ip = PWAFunction.indicator([Halfspace((-1,), 0)])
        im = PWAFunction.indicator([Halfspace((1,), 0)])
        r = singular_qualification(ip, im, (0,))
        assert not r.holds and r.intersection.contains((-1,))

    @pytest.mark.parametrize("pair", [(ABS, NEGABS), (ABS, ZERO1), (NEGABS, NEGABS)])
    def test_real_valued_pairs_hold(self, pair):
        assert singular_qualification(*pair, (0,)).holds

    @settings(max_examples=15)
    @given(lipschitz_pwa(2), lipschitz_pwa(2))
    def test_lipschitz_pairs_always_hold(self, f1, f2):
        assert singular_qualification(f1, f2, (0, 0)).holds


class TestSumRule:
    def test_abs_plus_negative_abs(self):
        r = sum_rule_check(ABS, NEGABS, (0,))
        assert r.sum_subdifferential.polytope == [(0,)]
        assert r.holds and r.hypotheses_certified
        (v, (s1, s2)), = r.decompositions
        assert s1[0] + s2[0] == 0 and v == (0,)

    def test_twice_abs(self):
        r = sum_rule_check(ABS, ABS, (0,))
        assert interval(r.sum_subdifferential) == (-2, 2)
        assert r.holds and r.consistent

    def test_lift_dimensions(self):
        lift = epigraph_lift(ABS, NEGABS, (0,))
        assert lift.basepoint == (0, 0, 0)
        assert lift.c1.dim == 3 and len(lift.c2.pieces) == 2

    def test_outside_domain(self):
        f = PWAFunction.indicator([Halfspace((-1,), 0)])
        with pytest.raises(PointOutsideDomain):
            sum_rule_check(f, ABS, (-1,))

    @settings(max_examples=15)
    @given(lipschitz_pwa(2), lipschitz_pwa(2))
    def test_decompositions_are_exact(self, f1, f2):
        r = sum_rule_check(f1, f2, (0, 0))
        assert r.consistent
        for v, dec in r.decompositions:
            if dec is None:
                continue
            s1, s2 = dec
            assert tuple(a + b for a, b in zip(s1, s2)) == v
            assert r.sub_1.contains(s1) and r.sub_2.contains(s2)

    def test_sum_subdifferential_inside_sum_for_lipschitz(self):
        # for locally Lipschitz functions the inclusion always holds
        rng = random.Random(11)
        for _ in range(10):
            pieces = lambda: [((rng.randint(-2, 2), rng.randint(-2, 2)), 0) for _ in range(rng.randint(1, 3))]
            f1 = PWAFunction.max_affine(pieces())
            f2 = PWAFunction.neg_max(pieces())
            assert sum_rule_check(f1, f2, (0, 0)).holds


class TestIntermediate:
    def test_zero_functions(self):
        z = PWAFunction.max_affine([((0,), 0)])
        r = intermediate_inclusion_check(z, z, (0,))
        assert r.holds
        assert r.normal_cone.equals(type(r.normal_cone).from_v([(0, -1, -1)]))

    @pytest.mark.parametrize("pair", [(ABS, NEGABS), (ABS, ABS), (NEGABS, NEGABS)])
    def test_named_pairs(self, pair):
        r = intermediate_inclusion_check(*pair, (0,))
        assert r.tangent_inclusion.holds
        for g in r.normal_cone.v_rep:
            assert g[1] == g[2]
