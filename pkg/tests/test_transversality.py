import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clarkekit.errors import InputError, NotHypertangent, NoWitness
from clarkekit.gallery import gallery_set
from clarkekit.geometry import add, norm_sq, scale, sub
from clarkekit.sets import UnionSet, clarke_tangent_cone
from clarkekit.transversality import (
    NotCertified,
    TransversalityCertificate,
    WitnessRecord,
    certify_hypotheses,
    certify_uts,
    hypertangent_epsilon,
    norm_decrease,
    open_uts_from_hypertangents,
    rational_unit,
    strong_transversality,
    tangent_difference_is_full,
    uts_calculus_check,
    uts_convex_cap,
    uts_from_clarke,
    uts_intersection_check,
    witness_search,
)

from strategies import union_sets

UPPER = gallery_set("upper-halfplane")
BELOW = gallery_set("below-diagonal")
WEDGE = gallery_set("wedge")


def certificate(a=UPPER, b=BELOW):
    return strong_transversality(uts_from_clarke(a, rows=()), uts_from_clarke(b, rows=()))


class TestCandidates:
    def test_clarke_cap_is_exact(self):
        d = uts_from_clarke(UPPER)
        assert d.exact and d.certified and d.delta is None
        assert all(r.passed for r in d.certificate_table)

    def test_outside_direction_is_rejected(self):
        d = certify_uts(UPPER, [(0, -1)])
        assert not d.exact and not d.certified
        assert d.certificate_table[0].status == "failed"

    def test_quadrant_union_axis_not_certified(self):
        d = certify_uts(gallery_set("quadrant-union"), [(1, 0)])
        assert not d.certified

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            certify_uts(UPPER, [(1, 0, 0)])

    def test_convex_cap_requires_single_piece(self):
        assert uts_convex_cap(WEDGE, 2).certified
        with pytest.raises(InputError):
            uts_convex_cap(gallery_set("halfplane-union"))

    def test_calculus_entries(self):
        d = uts_from_clarke(WEDGE)
        dp = certify_uts(WEDGE, [(0, 1)])
        rep = uts_calculus_check(d, dp, 3, M=2, trials=24)
        names = [e.name for e in rep.entries]
        assert names == ["scaled", "subset", "union_hull", "closure", "closed_convex_hull", "convex_cap"]
        assert rep.passed

    def test_calculus_rejects_bad_scale(self):
        d = uts_from_clarke(WEDGE)
        with pytest.raises(InputError):
            uts_calculus_check(d, d, 0)

    @settings(max_examples=15)
    @given(union_sets(n=2, max_pieces=2))
    def test_clarke_caps_pass_the_sampled_rows(self, u):
        d = uts_from_clarke(u, trials=16)
        assert d.exact
        assert all(r.passed for r in d.certificate_table)


class TestStrongTransversality:
    def test_certified_pair(self):
        cert = certificate()
        assert isinstance(cert, TransversalityCertificate)
        assert cert.rho_squared > 0 and cert.delta is None

    def test_touching_halfplanes(self):
        r = certificate(UPPER, UnionSet.from_halfspaces([[(0, 1)]]))
        assert isinstance(r, NotCertified)
        assert r.witness is not None and r.witness.offset == 0

    def test_uncertified_candidate(self):
        bad = certify_uts(UPPER, [(0, -1)])
        r = strong_transversality(bad, uts_from_clarke(BELOW))
        assert isinstance(r, NotCertified)

    def test_ball_really_inside_difference_hull(self):
        # every unit direction u: support of co(D_A - D_B) at u must reach rho
        cert = certificate()
        pts = [sub(p, q) for p in cert.d_a.polytope for q in cert.d_b.polytope]
        P = np.array(pts, float)
        rho = math.sqrt(cert.rho_squared)
        for k in range(720):
            t = 2 * math.pi * k / 720
            assert (P @ np.array([math.cos(t), math.sin(t)])).max() >= rho - 1e-12

    def test_hypotheses(self):
        rep = certify_hypotheses(UPPER, BELOW)
        assert rep.certified and rep.density
        assert tangent_difference_is_full(UPPER, BELOW)
        assert tangent_difference_is_full(UPPER, UPPER)
        assert not tangent_difference_is_full(UPPER, UnionSet.from_halfspaces([[(0, 1)]]))


class TestWitness:
    @pytest.mark.parametrize("eps", [F(1, 10), F(1, 4)])
    def test_records_satisfy_decrease(self, eps):
        cert = certificate()
        rng = random.Random(4)
        for _ in range(10):
            xa = (F(rng.randint(-8, 8), 8), F(rng.randint(0, 8), 8))
            xb = (F(rng.randint(-8, 8), 8), F(rng.randint(-8, 8), 8))
            if xb[1] > xb[0]:
                xb = (xb[1], xb[0])
            if xa == xb:
                continue
            rec = witness_search(cert, xa, xb, eps)
            assert rec.holds(UPPER, BELOW)
            assert rec.eta == 1 - 3 * eps
            # float recheck of the decrease inequality
            d = np.array(sub(xa, xb), float)
            w = np.array(sub(rec.w_a, rec.w_b), float)
            lhs = np.linalg.norm(d + float(rec.t) * w)
            assert lhs <= np.linalg.norm(d) - float(rec.t * rec.eta) + 1e-12

    def test_input_checks(self):
        cert = certificate()
        with pytest.raises(InputError):
            witness_search(cert, (0, 1), (0, 1), F(1, 10))
        with pytest.raises(InputError):
            witness_search(cert, (0, -1), (1, 0), F(1, 10))
        with pytest.raises(InputError):
            witness_search(cert, (0, 1), (1, 0), F(1, 3))

    def test_tampered_record_fails(self):
        cert = certificate()
        rec = witness_search(cert, (0, 1), (1, 0), F(1, 10))
        bad = WitnessRecord(rec.x_a, rec.x_b, rec.t * 100, rec.w_a, rec.w_b, rec.decrease, rec.M, rec.eta)
        assert not bad.decrease_holds() or not bad.holds(UPPER, BELOW)

    @given(st.fractions(0, 50, max_denominator=20), st.fractions(0, 50, max_denominator=20),
           st.fractions(0, 5, max_denominator=20))
    def test_norm_decrease_matches_float(self, lhs, dsq, s):
        exact = norm_decrease(F(lhs), F(dsq), F(s))
        gap = math.sqrt(dsq) - float(s) - math.sqrt(lhs)
        if abs(gap) > 1e-9:
            assert exact == (gap >= 0)

    def test_norm_decrease_rejects_negative_step(self):
        with pytest.raises(ValueError):
            norm_decrease(F(1), F(1), F(-1))


class TestIntersectionCheck:
    def test_common_directions(self):
        cert = certificate()
        rep = uts_intersection_check(cert, [(F(1, 2), F(0))], trials=16)
        assert rep.passed

    def test_direction_not_common(self):
        cert = certificate()
        with pytest.raises(InputError):
            uts_intersection_check(cert, [(F(0), F(1))])


def true_hypertangent_radius(normals, v):
    # for a convex cone C, z + v + eta B in C for all z in C iff v + eta B in C
    v = np.array(v, float)
    return min(-np.dot(a, v) / np.linalg.norm(a) for a in np.array(normals, float))


class TestHypertangent:
    def test_halfplane_vertical(self):
        assert hypertangent_epsilon(UPPER, (0, 1)) == F(15, 16)

    def test_not_hypertangent(self):
        with pytest.raises(NotHypertangent):
            hypertangent_epsilon(UPPER, (0, -1))
        with pytest.raises(NotHypertangent):
            hypertangent_epsilon(UPPER, (1, 0))

    def test_needs_unit_vector(self):
        with pytest.raises(InputError):
            hypertangent_epsilon(UPPER, (0, 2))

    def test_rational_unit(self):
        for m in [0, F(1, 3), 2, -5]:
            assert norm_sq(rational_unit(m)) == 1

    @pytest.mark.parametrize("host", [UPPER, WEDGE], ids=["halfplane", "wedge"])
    @given(m=st.fractions(-4, 4, max_denominator=16))
    def test_matches_closed_form_within_one_step(self, host, m):
        v = rational_unit(m)
        normals = [h.normal for h in host.pieces[0].h_rep]
        true = true_hypertangent_radius(normals, v)
        grid = 16
        try:
            est = hypertangent_epsilon(host, v, grid)
        except NotHypertangent:
            assert true < 1 / grid + 1e-12
            return
        assert float(est) <= true + 1e-12
        assert true - float(est) <= 1 / grid + 1e-12 or est == F(grid - 1, grid)

    def test_refinement_is_monotone(self):
        v = rational_unit(F(1, 2))
        e16 = hypertangent_epsilon(WEDGE, v, 16)
        e32 = hypertangent_epsilon(WEDGE, v, 32)
        assert e16 <= e32

    def test_open_uts(self):
        d = open_uts_from_hypertangents(UPPER, [rational_unit(F(1, 2)), rational_unit(2)])
        assert d.certified
        with pytest.raises(NotHypertangent):
            open_uts_from_hypertangents(UPPER, [(1, 0)])
