"""Uniform tangent sets, transversality certificates and the witness search.

For a union of cones a bounded set D of directions is a uniform tangent set
exactly when D lies in the Clarke tangent cone: each direction has its own
(delta, lambda) for a given eps, and compactness of D makes them uniform.
That inclusion is checked exactly; the sampling oracle adds rows of
empirical evidence on top.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .cones import NotTransversal, PolyhedralCone, Radius, inradius, minkowski_sum, transversality_radius, truncate
from .errors import InputError, NotHypertangent, NoWitness
from .geometry import (
    Halfspace,
    Polyhedron,
    Q,
    Vector,
    add,
    dot,
    fmt,
    is_zero,
    neg,
    norm_sq,
    polyhedral_combination,
    scale,
    simplex_standard,
    sqrt_bounds,
    sub,
    vector,
    zero,
)
from .oracle import MembershipOracle, check_uts
from .sets import UnionSet, clarke_tangent_cone

DEFAULT_ROWS = (
    (Fraction(1, 4), Fraction(1, 2), Fraction(1, 2)),
    (Fraction(1, 8), Fraction(1, 4), Fraction(1, 4)),
)


@dataclass(frozen=True)
class CertRow:
    eps: Fraction
    delta: Fraction
    lam: Fraction
    trials: int
    passed: bool
    seed: int = 0
    status: str = ""

    def to_json(self) -> dict:
        return {"eps": fmt(self.eps), "delta": fmt(self.delta), "lambda": fmt(self.lam),
                "trials": self.trials, "seed": self.seed, "passed": self.passed, "status": self.status}


@dataclass(frozen=True, eq=False)
class UniformTangentSetCandidate:
    host: UnionSet
    polytope: tuple
    certificate_table: tuple = ()
    exact: bool = False

    @property
    def certified(self) -> bool:
        if self.exact:
            return True
        return bool(self.certificate_table) and all(r.passed for r in self.certificate_table)

    @property
    def delta(self) -> Fraction | None:
        """Radius around x0 within which the certificate speaks; None means unrestricted."""
        if self.exact:
            return None
        ok = [r.delta for r in self.certificate_table if r.passed]
        return min(ok) if ok else Fraction(0)

    def to_json(self) -> dict:
        return {
            "polytope": [[fmt(x) for x in v] for v in self.polytope],
            "exact": self.exact,
            "certified": self.certified,
            "provenance": "exact" if self.exact else "sampled",
            "table": [r.to_json() for r in self.certificate_table],
        }


def inside_clarke_cone(host: UnionSet, points: Sequence[Sequence], cone: PolyhedralCone | None = None) -> bool:
    cone = cone or clarke_tangent_cone(host)
    return all(cone.contains(p) for p in points)


def certify_uts(host: UnionSet, points: Sequence[Sequence], rows: Sequence[tuple] = DEFAULT_ROWS,
                trials: int = 48, seed: int = 0) -> UniformTangentSetCandidate:
    pts = tuple(vector(p) for p in points)
    if pts:
        for p in pts:
            if len(p) != host.dim:
                raise InputError("direction dimension differs from host dimension")
    exact = inside_clarke_cone(host, pts)
    table = []
    if pts and rows:
        oracle = MembershipOracle.from_union(host)
        for eps, delta, lam in rows:
            v = check_uts(oracle, host.basepoint, pts, eps, delta, lam, trials, seed)
            table.append(CertRow(Q(eps), Q(delta), Q(lam), trials, v.passed, seed, v.status))
    return UniformTangentSetCandidate(host, pts, tuple(table), exact)


def uts_from_clarke(host: UnionSet, radius=1, **kw) -> UniformTangentSetCandidate:
    """D = T̂ ∩ radius·(cross-polytope)."""
    t = truncate(clarke_tangent_cone(host), "l1", Q(radius))
    return certify_uts(host, t.vertices, **kw)


def uts_convex_cap(host: UnionSet, M=1, **kw) -> UniformTangentSetCandidate:
    """(S - x0) ∩ M·(cross-polytope) for a single convex piece."""
    if len(host.pieces) != 1:
        raise InputError("convex cap needs a single convex piece")
    return certify_uts(host, truncate(host.pieces[0], "l1", Q(M)).vertices, **kw)


# ---------------------------------------------------------------------------
# strong transversality


@dataclass
class TransversalityCertificate:
    d_a: UniformTangentSetCandidate
    d_b: UniformTangentSetCandidate
    rho_squared: Fraction
    difference_hull: list

    @property
    def delta(self) -> Fraction | None:
        da, db = self.d_a.delta, self.d_b.delta
        if da is None:
            return db
        if db is None:
            return da
        return min(da, db)

    def to_json(self) -> dict:
        return {
            "verdict": "certified",
            "rho_squared": fmt(self.rho_squared),
            "rho_decimal": round(float(self.rho_squared) ** 0.5, 12),
            "difference_hull": [h.to_json() for h in self.difference_hull],
            "d_a": self.d_a.to_json(),
            "d_b": self.d_b.to_json(),
        }


@dataclass
class NotCertified:
    reason: str
    witness: Halfspace | None = None

    def to_json(self) -> dict:
        d = {"verdict": "not_certified", "reason": self.reason}
        if self.witness is not None:
            d["witness"] = self.witness.to_json()
        return d


def strong_transversality(d_a: UniformTangentSetCandidate, d_b: UniformTangentSetCandidate):
    if d_a.host.basepoint != d_b.host.basepoint:
        raise InputError("hosts must share the basepoint")
    if not (d_a.certified and d_b.certified):
        return NotCertified("a tangent-set candidate is not certified")
    if not d_a.polytope or not d_b.polytope:
        return NotCertified("empty tangent set")
    diffs = [sub(p, q) for p in d_a.polytope for q in d_b.polytope]
    hull = Polyhedron.from_v(diffs, d_a.host.dim)
    r = inradius(hull)
    if isinstance(r, Halfspace):
        return NotCertified("0 is not interior to co(D_A - D_B)", r)
    return TransversalityCertificate(d_a, d_b, r, list(hull.facets))


# ---------------------------------------------------------------------------
# witness search


@dataclass(frozen=True)
class WitnessRecord:
    x_a: Vector
    x_b: Vector
    t: Fraction
    w_a: Vector
    w_b: Vector
    decrease: Fraction
    M: Fraction
    eta: Fraction

    def decrease_holds(self) -> bool:
        """||d + t(w_a - w_b)|| <= ||d|| - t*eta in squared form, d = x_a - x_b."""
        d = sub(self.x_a, self.x_b)
        lhs = norm_sq(add(d, scale(self.t, sub(self.w_a, self.w_b))))
        return norm_decrease(lhs, norm_sq(d), self.t * self.eta)

    def holds(self, a: UnionSet, b: UnionSet) -> bool:
        return (
            a.contains(add(self.x_a, scale(self.t, self.w_a)))
            and b.contains(add(self.x_b, scale(self.t, self.w_b)))
            and norm_sq(self.w_a) <= self.M ** 2
            and norm_sq(self.w_b) <= self.M ** 2
            and self.t > 0
            and self.decrease_holds()
        )

    def to_json(self) -> dict:
        return {k: ([fmt(x) for x in v] if isinstance(v, tuple) else fmt(v)) for k, v in self.__dict__.items()}


def norm_decrease(lhs_sq: Fraction, d_sq: Fraction, s: Fraction) -> bool:
    """Decide sqrt(lhs_sq) <= sqrt(d_sq) - s exactly (s >= 0)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if d_sq < s * s:
        return False
    # lhs_sq <= d_sq - 2 s sqrt(d_sq) + s^2  <=>  2 s sqrt(d_sq) <= d_sq + s^2 - lhs_sq
    rhs = d_sq + s * s - lhs_sq
    if rhs < 0:
        return False
    return 4 * s * s * d_sq <= rhs * rhs


def _max_step(u: UnionSet, y: Vector, w: Vector) -> Fraction | None:
    """Largest t with y + t*w in some piece (None when unbounded, 0 when none works)."""
    d = sub(y, u.basepoint)
    best = Fraction(0)
    for c in u.pieces:
        if not c.contains(d):
            continue
        step = None
        ok = True
        for h in c.h_rep:
            aw = dot(h.normal, w)
            if aw <= 0:
                continue
            ad = dot(h.normal, d)
            if ad == 0:
                ok = False
                break
            s = -ad / aw
            step = s if step is None else min(step, s)
        if not ok:
            continue
        if step is None:
            return None
        best = max(best, step)
    return best


def witness_search(cert: TransversalityCertificate, x_a: Sequence, x_b: Sequence, epsilon) -> WitnessRecord:
    """Build the two-point decrease witness following the strong-to-tangential argument.

    v = -(x_a - x_b)/||x_a - x_b|| is written as v_a - v_b with v_a, v_b in the
    tangent sets scaled by 1/rho, then both points move a common step t.
    """
    a, b = cert.d_a.host, cert.d_b.host
    x_a, x_b = vector(x_a), vector(x_b)
    eps = Q(epsilon)
    if not (0 < eps < Fraction(1, 3)):
        raise InputError("epsilon must lie in (0, 1/3)")
    if x_a == x_b:
        raise InputError("x_a and x_b must differ")
    if not a.contains(x_a) or not b.contains(x_b):
        raise InputError("x_a must lie in A and x_b in B")
    delta = cert.delta
    if delta is not None:
        x0 = a.basepoint
        if norm_sq(sub(x_a, x0)) > delta ** 2 or norm_sq(sub(x_b, x0)) > delta ** 2:
            raise InputError("points lie outside the certified delta-ball")
    eta = 1 - 3 * eps
    d = sub(x_a, x_b)
    dsq = norm_sq(d)
    n_lo, n_hi = sqrt_bounds(dsq, bits=64)
    rho_lo = sqrt_bounds(cert.rho_squared, bits=64)[0]
    if rho_lo <= 0:
        raise NoWitness("radius lower bound vanished")
    da = [scale(1 / rho_lo, p) for p in cert.d_a.polytope]
    db = [scale(1 / rho_lo, q) for q in cert.d_b.polytope]
    target = scale(-1 / n_hi, d)  # ||target|| <= 1

    # convex weights on da and db with sum la*p - sum lb*q = target
    n = len(d)
    A = [[p[i] for p in da] + [-q[i] for q in db] for i in range(n)]
    A.append([1] * len(da) + [0] * len(db))
    A.append([0] * len(da) + [1] * len(db))
    res = simplex_standard(A, list(target) + [1, 1], [0] * (len(da) + len(db)))
    if res[0] != "optimal":
        raise NoWitness("direction not covered by the scaled difference hull")
    lam = res[1]
    w_a, w_b = zero(n), zero(n)
    for l, p in zip(lam[: len(da)], da):
        w_a = add(w_a, scale(l, p))
    for l, q in zip(lam[len(da):], db):
        w_b = add(w_b, scale(l, q))

    M = max(sqrt_bounds(norm_sq(v), bits=32)[1] for v in da + db) + eps
    t = min(n_lo, Fraction(1))
    for host, x, w in ((a, x_a, w_a), (b, x_b, w_b)):
        s = _max_step(host, x, w)
        if s is not None:
            t = min(t, s)
    if t <= 0:
        raise NoWitness("no admissible step inside the host set")
    rec = WitnessRecord(x_a, x_b, t, w_a, w_b, t * eta, M, eta)
    if not rec.holds(a, b):
        raise NoWitness("constructed record fails the exact check")
    return rec


# ---------------------------------------------------------------------------
# property reports


@dataclass
class PropertyEntry:
    name: str
    passed: bool
    exact: bool
    detail: dict = field(default_factory=dict)


@dataclass
class PropertyReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [{"name": e.name, "passed": e.passed, "exact": e.exact, **e.detail} for e in self.entries],
        }


def _entry(name: str, cand: UniformTangentSetCandidate) -> PropertyEntry:
    return PropertyEntry(name, cand.certified, cand.exact, {"candidate": cand.to_json()})


def uts_calculus_check(d: UniformTangentSetCandidate, d_prime: UniformTangentSetCandidate, c,
                       M=1, rows: Sequence[tuple] = ((Fraction(1, 4), Fraction(1, 2), Fraction(1, 2)),
                                                      (Fraction(1, 8), Fraction(1, 4), Fraction(1, 4))),
                       trials: int = 48, seed: int = 0) -> PropertyReport:
    """Re-certify the standard constructions on tangent sets of one host."""
    c = Q(c)
    if c <= 0:
        raise InputError("scale factor must be positive")
    host = d.host
    if d_prime.host is not host and d_prime.host.to_json() != host.to_json():
        raise InputError("candidates must share the host")
    kw = {"rows": rows, "trials": trials, "seed": seed}
    entries = []
    if not d.polytope:
        return PropertyReport([PropertyEntry("empty", True, True)])
    entries.append(_entry("scaled", certify_uts(host, [scale(c, v) for v in d.polytope], **kw)))
    first = d.polytope[0]
    centroid = scale(Fraction(1, len(d.polytope)), _sum(d.polytope))
    entries.append(_entry("subset", certify_uts(host, [first, centroid], **kw)))
    both = list(d.polytope) + list(d_prime.polytope)
    entries.append(_entry("union_hull", certify_uts(host, Polyhedron.from_v(both, host.dim).vertices, **kw)))
    entries.append(_entry("closure", certify_uts(host, d.polytope, **kw)))
    hull = Polyhedron.from_v(list(d.polytope), host.dim).vertices
    entries.append(_entry("closed_convex_hull", certify_uts(host, hull, **kw)))
    if len(host.pieces) == 1:
        entries.append(_entry("convex_cap", uts_convex_cap(host, M, **kw)))
    return PropertyReport(entries)


def _sum(vs):
    out = zero(len(vs[0]))
    for v in vs:
        out = add(out, v)
    return out


def uts_intersection_check(cert: TransversalityCertificate, d_common: Sequence[Sequence],
                           trials: int = 48, seed: int = 0) -> PropertyReport:
    pts = [vector(p) for p in d_common]
    if not pts:
        return PropertyReport([PropertyEntry("vacuous", True, True)])
    for p in pts:
        for cand in (cert.d_a, cert.d_b):
            if polyhedral_combination(list(cand.polytope), [], p) is None:
                raise InputError("d_common must lie in both tangent sets")
    host = cert.d_a.host.intersection(cert.d_b.host)
    return PropertyReport([_entry("intersection", certify_uts(host, pts, trials=trials, seed=seed))])


# ---------------------------------------------------------------------------
# hypertangents


def _probe_points(u: UnionSet) -> list[Vector]:
    """Fixed sample of S - x0 (a cone, so scaling covers every neighbourhood)."""
    pts = [zero(u.dim)]
    for c in u.pieces:
        gens = list(c.v_rep)
        for g in gens:
            for s in (Fraction(1, 4), Fraction(1), Fraction(4)):
                pts.append(scale(s, g))
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                s = add(gens[i], gens[j])
                if not is_zero(s):
                    pts.append(s)
    return pts


def ball_in_cone(c: PolyhedralCone, center: Sequence, radius: Fraction) -> bool:
    """Is the closed Euclidean ball inside the cone?"""
    for h in c.h_rep:
        v = dot(h.normal, center)
        if v > 0 or v * v < radius * radius * norm_sq(h.normal):
            return False
    return True


def hypertangent_epsilon(u: UnionSet, v: Sequence, grid: int = 16) -> Fraction:
    """Largest j/grid (j < grid) with z + v + eta*B inside one piece for every probe z."""
    v = vector(v)
    if len(v) != u.dim:
        raise InputError("direction dimension mismatch")
    if norm_sq(v) != 1:
        raise InputError("direction must have unit norm")
    if grid < 2:
        raise InputError("grid must be at least 2")
    probes = _probe_points(u)
    for j in range(grid - 1, 0, -1):
        eta = Fraction(j, grid)
        if all(any(ball_in_cone(c, add(z, v), eta) for c in u.pieces) for z in probes):
            return eta
    raise NotHypertangent(f"no grid eta works for direction {[fmt(x) for x in v]}")


def open_uts_from_hypertangents(u: UnionSet, directions: Sequence[Sequence], grid: int = 16,
                                **kw) -> UniformTangentSetCandidate:
    pts, bad = [], []
    for v in directions:
        try:
            pts.append(scale(hypertangent_epsilon(u, v, grid), vector(v)))
        except NotHypertangent:
            bad.append(tuple(vector(v)))
    if bad:
        raise NotHypertangent(f"{len(bad)} of {len(directions)} directions are not hypertangent")
    return certify_uts(u, pts, **kw)


def rational_unit(m) -> Vector:
    """Rational point on the unit circle from the slope parameter m."""
    m = Q(m)
    den = 1 + m * m
    return ((1 - m * m) / den, 2 * m / den)


# ---------------------------------------------------------------------------
# hypotheses used by the normal intersection property


def is_quasisolid(points: Sequence[Sequence]) -> bool:
    """Every nonempty convex set in finite dimension qualifies."""
    return True


def tangent_difference_is_full(a: UnionSet, b: UnionSet) -> bool:
    """Is T̂_A - T̂_B the whole space (dense convex = everything here)?"""
    s = minkowski_sum(clarke_tangent_cone(a), clarke_tangent_cone(b).negated())
    return s.is_full


@dataclass
class HypothesisReport:
    strong: object
    cones: object
    density: bool

    @property
    def certified(self) -> bool:
        return isinstance(self.strong, TransversalityCertificate) and isinstance(self.cones, Radius)

    def to_json(self) -> dict:
        return {
            "certified": self.certified,
            "strong_transversality": self.strong.to_json(),
            "cone_transversality": self.cones.to_json(),
            "tangent_difference_full": self.density,
        }


def certify_hypotheses(a: UnionSet, b: UnionSet, rows: Sequence[tuple] = (), trials: int = 32,
                       seed: int = 0) -> HypothesisReport:
    da = uts_from_clarke(a, rows=rows, trials=trials, seed=seed)
    db = uts_from_clarke(b, rows=rows, trials=trials, seed=seed)
    strong = strong_transversality(da, db)
    cones = transversality_radius(clarke_tangent_cone(a), clarke_tangent_cone(b))
    return HypothesisReport(strong, cones, tangent_difference_is_full(a, b))
