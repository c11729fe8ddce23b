"""Piecewise-affine functions, their epigraphs and Clarke subdifferentials.

A function is stored as min over branches of max over affine pieces, which
covers max-affine functions, their negatives and sums of the two, with an
optional polyhedral domain.  Near a point the epigraph is a finite union of
polyhedral cones, so every object here is computed exactly through the set
model.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cones import PolyhedralCone, intersect, polar
from .errors import InputError, PointOutsideDomain
from .geometry import (
    Halfspace,
    Polyhedron,
    Q,
    Vector,
    check_cap,
    conic_combination,
    dot,
    fmt,
    neg,
    polyhedral_combination,
    scale,
    simplex_standard,
    vector,
    zero,
)
from .sets import UnionSet, clarke_normal_cone, clarke_tangent_cone, cone_inclusion, InclusionReport

Affine = tuple  # (gradient: Vector, offset: Fraction)


def _affine(g, c) -> Affine:
    return (vector(g), Q(c))


@dataclass(frozen=True, eq=False)
class PWAFunction:
    """f(x) = min_b max_{(g, c) in b} <g, x> + c on the domain, +inf outside."""

    kind: str
    branches: tuple
    domain: tuple = ()

    def __post_init__(self):
        if self.kind not in ("max", "negmax", "minmax"):
            raise InputError(f"unknown function type {self.kind!r}")
        if not self.branches or any(not b for b in self.branches):
            raise InputError("a function needs at least one affine piece")
        n = len(self.branches[0][0][0])
        check_cap(n)
        for b in self.branches:
            for g, _ in b:
                if len(g) != n:
                    raise InputError("gradient dimension mismatch")
        for h in self.domain:
            if h.dim != n:
                raise InputError("domain dimension mismatch")

    # -- constructors -----------------------------------------------------

    @classmethod
    def max_affine(cls, pieces: Sequence[tuple], domain: Sequence[Halfspace] = ()) -> "PWAFunction":
        return cls("max", (tuple(_affine(g, c) for g, c in pieces),), tuple(domain))

    @classmethod
    def neg_max(cls, pieces: Sequence[tuple], domain: Sequence[Halfspace] = ()) -> "PWAFunction":
        """-max_i(<g_i, x> + c_i) = min_i(<-g_i, x> - c_i)."""
        branches = tuple(((neg(vector(g)), -Q(c)),) for g, c in pieces)
        return cls("negmax", branches, tuple(domain))

    @classmethod
    def indicator(cls, domain: Sequence[Halfspace], dim: int | None = None) -> "PWAFunction":
        dim = dim or domain[0].dim
        return cls.max_affine([(zero(dim), 0)], domain)

    @classmethod
    def abs(cls) -> "PWAFunction":
        return cls.max_affine([((1,), 0), ((-1,), 0)])

    # -- evaluation -------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.branches[0][0][0])

    def in_domain(self, x: Sequence) -> bool:
        return all(h.contains(x) for h in self.domain)

    def value(self, x: Sequence) -> Fraction | None:
        if not self.in_domain(x):
            return None
        return min(max(dot(g, x) + c for g, c in b) for b in self.branches)

    def __call__(self, x):
        return self.value(x)

    def __add__(self, other: "PWAFunction") -> "PWAFunction":
        if self.dim != other.dim:
            raise InputError("dimension mismatch")
        branches = tuple(
            tuple((tuple(a + b for a, b in zip(g1, g2)), c1 + c2) for g1, c1 in b1 for g2, c2 in b2)
            for b1 in self.branches
            for b2 in other.branches
        )
        kind = "max" if self.kind == other.kind == "max" else "minmax"
        return PWAFunction(kind, branches, self.domain + other.domain)

    def scaled(self, c) -> "PWAFunction":
        c = Q(c)
        if c <= 0:
            raise InputError("scale factor must be positive")
        branches = tuple(tuple((scale(c, g), c * k) for g, k in b) for b in self.branches)
        return PWAFunction(self.kind, branches, self.domain)

    def gradient_at(self, x: Sequence) -> Vector | None:
        """Gradient where exactly one affine form is active, else None."""
        val = self.value(x)
        if val is None:
            return None
        live = set()
        for b in self.branches:
            if max(dot(g, x) + c for g, c in b) != val:
                continue
            for g, c in b:
                if dot(g, x) + c == val:
                    live.add(g)
        return next(iter(live)) if len(live) == 1 else None

    # -- serialisation ----------------------------------------------------

    def to_json(self) -> dict:
        def piece(g, c):
            return {"gradient": [fmt(x) for x in g], "offset": fmt(c)}

        d: dict = {"type": self.kind}
        if self.kind == "max":
            d["pieces"] = [piece(g, c) for g, c in self.branches[0]]
        elif self.kind == "negmax":
            d["pieces"] = [piece(neg(g), -c) for (g, c), in self.branches]
        else:
            d["branches"] = [[piece(g, c) for g, c in b] for b in self.branches]
        if self.domain:
            d["domain"] = [h.to_json() for h in self.domain]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PWAFunction":
        if not isinstance(d, dict):
            raise InputError("function must be an object")
        kind = d.get("type")
        domain = tuple(Halfspace.from_json(h) for h in d.get("domain", []) or [])
        try:
            if kind in ("max", "negmax"):
                pieces = [(p["gradient"], p.get("offset", 0)) for p in d["pieces"]]
                return cls.max_affine(pieces, domain) if kind == "max" else cls.neg_max(pieces, domain)
            if kind == "minmax":
                branches = tuple(
                    tuple(_affine(p["gradient"], p.get("offset", 0)) for p in b) for b in d["branches"]
                )
                return cls("minmax", branches, domain)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed function: missing {exc}") from exc
        raise InputError(f"unknown function type {kind!r}")


# ---------------------------------------------------------------------------
# local epigraphs


def _check_point(f: PWAFunction, x0: Sequence) -> tuple[Vector, Fraction]:
    x0 = vector(x0)
    if len(x0) != f.dim:
        raise InputError("point dimension mismatch")
    v = f.value(x0)
    if v is None:
        raise PointOutsideDomain(f"{[fmt(x) for x in x0]} is outside the domain")
    return x0, v


def _epigraph_rows(f: PWAFunction, x0: Vector, val: Fraction) -> list[list[tuple]]:
    """Per active branch: rows (g, -1) of active pieces plus active domain rows (a, 0)."""
    dom = [tuple(h.normal) for h in f.domain if dot(h.normal, x0) == h.offset]
    pieces = []
    for b in f.branches:
        if max(dot(g, x0) + c for g, c in b) != val:
            continue
        rows = [(g, True) for g, c in b if dot(g, x0) + c == val]
        rows += [(a, False) for a in dom]
        pieces.append(rows)
    return pieces


def _lift(row, r_slot: bool, n: int, m: int, target: int) -> Vector:
    g, is_piece = row
    out = list(g) + [Fraction(0)] * (m - n)
    if is_piece:
        out[target] = Fraction(-1)
    return tuple(out)


def local_epigraph(f: PWAFunction, x0: Sequence) -> UnionSet:
    """epi f near (x0, f(x0)) as a union of cones in R^(n+1)."""
    x0, val = _check_point(f, x0)
    n = f.dim
    pieces = []
    for rows in _epigraph_rows(f, x0, val):
        hs = [Halfspace(_lift(r, True, n, n + 1, n)) for r in rows]
        pieces.append(PolyhedralCone.from_h(hs, n + 1))
    return UnionSet.of(_dedupe(pieces), x0 + (val,))


def _dedupe(pieces):
    out = []
    for p in pieces:
        if not any(p.equals(q) for q in out):
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# subdifferentials


@dataclass
class SubdifferentialSet:
    polytope: list
    singular_cone: PolyhedralCone
    polyhedron: Polyhedron = field(repr=False, default=None)

    @property
    def is_empty(self) -> bool:
        return self.polyhedron is None or self.polyhedron.is_empty

    def contains(self, x: Sequence) -> bool:
        return not self.is_empty and self.polyhedron.contains(x)

    def to_json(self) -> dict:
        d = {
            "vertices": [[fmt(x) for x in v] for v in self.polytope],
            "singular_cone": self.singular_cone.to_json(),
        }
        if self.polyhedron is not None and (self.polyhedron.rays or self.polyhedron.lines):
            d["unbounded"] = True
        return d


def slice_normal_cone(nc: PolyhedralCone, n: int) -> SubdifferentialSet:
    """{x* : (x*, -1) in nc} and {x* : (x*, 0) in nc}."""
    hs, sing = [], []
    empty = False
    for h in nc.h_rep:
        a, s = h.normal[:n], h.normal[n]
        # <a, x*> - s <= 0
        if all(x == 0 for x in a):
            if s < 0:
                empty = True
            continue
        hs.append(Halfspace(a, s))
        sing.append(Halfspace(a))
    singular = PolyhedralCone.from_h(sing, n)
    if empty:
        return SubdifferentialSet([], singular, Polyhedron(n))
    p = Polyhedron.from_h(hs, n)
    return SubdifferentialSet(list(p.vertices), singular, p)


def clarke_subdifferential(f: PWAFunction, x0: Sequence) -> SubdifferentialSet:
    epi = local_epigraph(f, x0)
    return slice_normal_cone(clarke_normal_cone(epi), f.dim)


@dataclass
class QualificationReport:
    holds: bool
    singular_1: PolyhedralCone
    singular_2: PolyhedralCone
    intersection: PolyhedralCone

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "singular_1": self.singular_1.to_json(),
            "singular_2": self.singular_2.to_json(),
            "intersection": self.intersection.to_json(),
        }


def singular_qualification(f1: PWAFunction, f2: PWAFunction, x0: Sequence) -> QualificationReport:
    """Is the singular cone of f1 at x0 disjoint from minus that of f2 (apart from 0)?"""
    s1 = clarke_subdifferential(f1, x0).singular_cone
    s2 = clarke_subdifferential(f2, x0).singular_cone
    meet = intersect(s1, s2.negated())
    return QualificationReport(meet.is_zero, s1, s2, meet)


# ---------------------------------------------------------------------------
# epigraph lifting and the sum rule


@dataclass
class EpigraphLift:
    c1: UnionSet
    c2: UnionSet
    basepoint: Vector

    def to_json(self) -> dict:
        return {"basepoint": [fmt(x) for x in self.basepoint], "c1": self.c1.to_json(), "c2": self.c2.to_json()}


def _lifted(f: PWAFunction, x0: Vector, val: Fraction, slot: int, base: Vector) -> UnionSet:
    n = f.dim
    pieces = []
    for rows in _epigraph_rows(f, x0, val):
        hs = [Halfspace(_lift(r, True, n, n + 2, slot)) for r in rows]
        pieces.append(PolyhedralCone.from_h(hs, n + 2))
    return UnionSet.of(_dedupe(pieces), base)


def epigraph_lift(f1: PWAFunction, f2: PWAFunction, x0: Sequence) -> EpigraphLift:
    """C1 = {r1 >= f1(x)}, C2 = {r2 >= f2(x)} in R^n x R x R, conified at the basepoint."""
    x0, v1 = _check_point(f1, x0)
    _, v2 = _check_point(f2, x0)
    if f1.dim != f2.dim:
        raise InputError("dimension mismatch")
    n = f1.dim
    base = x0 + (v1, v2)
    return EpigraphLift(_lifted(f1, x0, v1, n, base), _lifted(f2, x0, v2, n + 1, base), base)


def _decompose_point(target: Vector, p1: Polyhedron, p2: Polyhedron):
    """s1 in p1, s2 in p2 with s1 + s2 = target, or None."""
    if p1.is_empty or p2.is_empty:
        return None
    n = len(target)
    r1 = list(p1.rays) + list(p1.lines) + [neg(l) for l in p1.lines]
    r2 = list(p2.rays) + list(p2.lines) + [neg(l) for l in p2.lines]
    cols = list(p1.vertices) + r1 + list(p2.vertices) + r2
    k1, k2 = len(p1.vertices), len(p2.vertices)
    A = [[c[i] for c in cols] for i in range(n)]
    A.append([1] * k1 + [0] * (len(cols) - k1))
    A.append([0] * (k1 + len(r1)) + [1] * k2 + [0] * len(r2))
    res = simplex_standard(A, list(target) + [1, 1], [0] * len(cols))
    if res[0] != "optimal":
        return None
    w = res[1]
    s1 = zero(n)
    for wi, c in zip(w[: k1 + len(r1)], cols[: k1 + len(r1)]):
        s1 = tuple(a + wi * b for a, b in zip(s1, c))
    return s1, tuple(t - a for t, a in zip(target, s1))


@dataclass
class SumRuleReport:
    hypotheses: object
    sum_subdifferential: SubdifferentialSet
    sub_1: SubdifferentialSet
    sub_2: SubdifferentialSet
    decompositions: list
    ray_checks: list

    @property
    def holds(self) -> bool:
        return all(d is not None for _, d in self.decompositions) and all(ok for _, ok in self.ray_checks)

    @property
    def hypotheses_certified(self) -> bool:
        return self.hypotheses.certified

    @property
    def consistent(self) -> bool:
        """The conclusion must hold whenever the hypotheses are certified."""
        return self.holds or not self.hypotheses_certified

    def to_json(self) -> dict:
        rows = []
        for v, dec in self.decompositions:
            r = {"vertex": [fmt(x) for x in v], "decomposes": dec is not None}
            if dec is not None:
                r["s1"] = [fmt(x) for x in dec[0]]
                r["s2"] = [fmt(x) for x in dec[1]]
            rows.append(r)
        return {
            "holds": self.holds,
            "hypotheses_certified": self.hypotheses_certified,
            "hypotheses": self.hypotheses.to_json(),
            "sum_subdifferential": self.sum_subdifferential.to_json(),
            "sub_1": self.sub_1.to_json(),
            "sub_2": self.sub_2.to_json(),
            "decompositions": rows,
            "ray_checks": [{"ray": [fmt(x) for x in r], "decomposes": ok} for r, ok in self.ray_checks],
        }


def sum_rule_check(f1: PWAFunction, f2: PWAFunction, x0: Sequence) -> SumRuleReport:
    from .transversality import certify_hypotheses

    lift = epigraph_lift(f1, f2, x0)
    hyp = certify_hypotheses(lift.c1, lift.c2)
    s = clarke_subdifferential(f1 + f2, x0)
    s1 = clarke_subdifferential(f1, x0)
    s2 = clarke_subdifferential(f2, x0)
    decs = [(v, _decompose_point(v, s1.polyhedron, s2.polyhedron)) for v in s.polytope]
    rays = []
    if not s.is_empty:
        rec = list(s1.polyhedron.rays) + list(s1.polyhedron.lines) + [neg(l) for l in s1.polyhedron.lines]
        rec += list(s2.polyhedron.rays) + list(s2.polyhedron.lines) + [neg(l) for l in s2.polyhedron.lines]
        for r in list(s.polyhedron.rays) + list(s.polyhedron.lines) + [neg(l) for l in s.polyhedron.lines]:
            rays.append((r, conic_combination(rec, r) is not None))
    return SumRuleReport(hyp, s, s1, s2, decs, rays)


@dataclass
class IntermediateReport:
    tangent_inclusion: InclusionReport
    symmetry_holds: bool
    normal_cone: PolyhedralCone
    asymmetric: list

    @property
    def holds(self) -> bool:
        return self.tangent_inclusion.holds and self.symmetry_holds

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "tangent_inclusion": self.tangent_inclusion.to_json(),
            "symmetry_holds": self.symmetry_holds,
            "normal_cone": self.normal_cone.to_json(),
            "asymmetric_generators": [[fmt(x) for x in g] for g in self.asymmetric],
        }


def intermediate_inclusion_check(f1: PWAFunction, f2: PWAFunction, x0: Sequence) -> IntermediateReport:
    """Check T̂_{C1∩C2} ⊆ T̂_C and N_C = {(x*, s, s) : (x*, s) in N_epi(f1+f2)},
    where C = {(x, r1, r2) : r1 + r2 >= f1(x) + f2(x)}."""
    lift = epigraph_lift(f1, f2, x0)
    total = f1 + f2
    x0v, val = _check_point(total, x0)
    n = total.dim
    pieces = []
    for rows in _epigraph_rows(total, x0v, val):
        hs = []
        for g, is_piece in rows:
            out = list(g) + [Fraction(0), Fraction(0)]
            if is_piece:
                out[n] = out[n + 1] = Fraction(-1)
            hs.append(Halfspace(tuple(out)))
        pieces.append(PolyhedralCone.from_h(hs, n + 2))
    c = UnionSet.of(_dedupe(pieces), lift.basepoint)
    t_meet = clarke_tangent_cone(lift.c1.intersection(lift.c2))
    inc = cone_inclusion(t_meet, clarke_tangent_cone(c))

    nc = clarke_normal_cone(c)
    ne = clarke_normal_cone(local_epigraph(total, x0v))
    asym = [g for g in nc.v_rep if g[n] != g[n + 1] or not ne.contains(g[: n + 1])]
    lifted = [tuple(g) + (g[n],) for g in ne.v_rep]
    sym = not asym and all(nc.contains(g) for g in lifted)
    return IntermediateReport(inc, sym, nc, asym)
