"""Closed convex polyhedral cones and a few non-polyhedral cones.

A :class:`PolyhedralCone` always carries both representations.  Equality and
inclusion are decided exactly by checking generators of one side against the
halfspaces of the other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from .errors import InputError, OriginMissing, UnsupportedPair
from .geometry import (
    Halfspace,
    Polyhedron,
    Vector,
    _facets_from_gens,
    _gens_from_rows,
    add,
    check_cap,
    check_dims,
    dot,
    fmt,
    is_zero,
    neg,
    norm_sq,
    nullspace,
    primitive,
    scale,
    sqrt_bounds,
    sub,
    unit,
    vector,
)


class PolyhedralCone:
    """Closed convex cone {x : <a, x> <= 0 for a in h_rep} = cone(v_rep)."""

    __slots__ = ("dim", "h_rep", "v_rep")

    def __init__(self, dim: int, h_rep: Sequence[Halfspace], v_rep: Sequence[Vector]):
        self.dim = dim
        self.h_rep = tuple(h_rep)
        self.v_rep = tuple(tuple(Fraction(x) for x in g) for g in v_rep)

    @classmethod
    def from_h(cls, halfspaces: Sequence[Halfspace], dim: int | None = None) -> "PolyhedralCone":
        hs = list(halfspaces)
        if dim is None:
            if not hs:
                raise InputError("dimension required for an empty constraint list")
            dim = hs[0].dim
        check_dims(*(h.normal for h in hs), dim=dim)
        check_cap(dim)
        if any(h.offset != 0 for h in hs):
            raise InputError("cone halfspaces must pass through the origin")
        gens = _gens_from_rows([h.normal for h in hs], dim)
        return cls(dim, _facets_from_gens(gens, dim), gens)

    @classmethod
    def from_v(cls, generators: Sequence[Sequence], dim: int | None = None) -> "PolyhedralCone":
        gens = [vector(g) for g in generators]
        if dim is None:
            if not gens:
                raise InputError("dimension required for an empty generator list")
            dim = len(gens[0])
        check_dims(*gens, dim=dim)
        check_cap(dim)
        facets = _facets_from_gens(gens, dim)
        return cls(dim, facets, _gens_from_rows([h.normal for h in facets], dim))

    @classmethod
    def full(cls, dim: int) -> "PolyhedralCone":
        return cls.from_h([], dim)

    @classmethod
    def origin(cls, dim: int) -> "PolyhedralCone":
        return cls.from_v([], dim)

    @classmethod
    def ray(cls, v: Sequence) -> "PolyhedralCone":
        return cls.from_v([v])

    # -- predicates -------------------------------------------------------

    def contains(self, x: Sequence) -> bool:
        return all(dot(h.normal, x) <= 0 for h in self.h_rep)

    def subset_of(self, other: "PolyhedralCone") -> bool:
        if self.dim != other.dim:
            raise InputError("dimension mismatch")
        return all(other.contains(g) for g in self.v_rep)

    def equals(self, other: "PolyhedralCone") -> bool:
        return self.subset_of(other) and other.subset_of(self)

    __eq__ = equals
    __hash__ = None

    @property
    def is_zero(self) -> bool:
        return all(is_zero(g) for g in self.v_rep)

    @property
    def is_full(self) -> bool:
        return not self.h_rep

    @property
    def lineality(self) -> list[Vector]:
        return nullspace([h.normal for h in self.h_rep], self.dim)

    @property
    def linear_dim(self) -> int:
        """Dimension of the linear span of the cone."""
        from .geometry import rank

        return rank(self.v_rep) if self.v_rep else 0

    def negated(self) -> "PolyhedralCone":
        return PolyhedralCone(
            self.dim,
            [Halfspace(neg(h.normal)) for h in self.h_rep],
            [neg(g) for g in self.v_rep],
        )

    def embed(self, n: int, coords: Sequence[int]) -> "PolyhedralCone":
        """Cylinder over this cone: coordinates ``coords`` of R^n, the rest free."""

        def lift(v):
            out = [Fraction(0)] * n
            for c, x in zip(coords, v):
                out[c] = x
            return tuple(out)

        free = [i for i in range(n) if i not in coords]
        gens = [lift(g) for g in self.v_rep]
        for i in free:
            gens.append(unit(n, i))
            gens.append(neg(unit(n, i)))
        return PolyhedralCone(n, [Halfspace(lift(h.normal)) for h in self.h_rep], gens)

    def __repr__(self) -> str:
        gens = ", ".join("(" + ", ".join(str(x) for x in g) + ")" for g in self.v_rep)
        return f"PolyhedralCone(dim={self.dim}, generators=[{gens}])"

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "h_rep": [h.to_json() for h in self.h_rep],
            "v_rep": [[fmt(x) for x in g] for g in self.v_rep],
        }

    @classmethod
    def from_json(cls, d: dict, dim: int | None = None) -> "PolyhedralCone":
        dim = d.get("dim", dim)
        if "h_rep" in d and d["h_rep"] is not None and "v_rep" not in d:
            return cls.from_h([Halfspace.from_json(h) for h in d["h_rep"]], dim)
        if "v_rep" in d:
            return cls.from_v([vector(g) for g in d["v_rep"]], dim)
        if "h_rep" in d:
            return cls.from_h([Halfspace.from_json(h) for h in d["h_rep"]], dim)
        raise InputError("cone needs h_rep or v_rep")


def polar(c: PolyhedralCone) -> PolyhedralCone:
    """{y : <y, v> <= 0 for all v in c}: generators become facet normals."""
    return PolyhedralCone(
        c.dim,
        [Halfspace(g) for g in c.v_rep if not is_zero(g)],
        [h.normal for h in c.h_rep],
    )


def minkowski_sum(c1: PolyhedralCone, c2: PolyhedralCone) -> PolyhedralCone:
    if c1.dim != c2.dim:
        raise InputError("dimension mismatch")
    return PolyhedralCone.from_v(list(c1.v_rep) + list(c2.v_rep), c1.dim)


def intersect(c1: PolyhedralCone, c2: PolyhedralCone) -> PolyhedralCone:
    if c1.dim != c2.dim:
        raise InputError("dimension mismatch")
    return PolyhedralCone.from_h(list(c1.h_rep) + list(c2.h_rep), c1.dim)


# ---------------------------------------------------------------------------
# polars of polytopes


def set_polar(p: Polyhedron) -> Polyhedron:
    """{y : <y, x> <= 1 for x in p} for a polyhedron containing the origin."""
    hs = [Halfspace(v, 1) for v in p.vertices if not is_zero(v)]
    hs += [Halfspace(r) for r in p.rays]
    eqs = [Halfspace(l) for l in p.lines]
    return Polyhedron.from_h(hs, p.dim, equations=eqs)


@dataclass
class SandwichReport:
    inclusions: dict
    tight: dict
    sets: dict = field(repr=False, default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.inclusions.values())

    def to_json(self) -> dict:
        return {"holds": self.holds, "inclusions": self.inclusions, "tight": self.tight}


SANDWICH_NAMES = (
    "polar_sum_in_polar_meet",
    "polar_meet_in_twice_polar_sum",
    "polar_intersection_in_sum_of_polars",
    "sum_of_polars_in_twice_polar_intersection",
)


def verify_polar_sandwich(a: Sequence[Sequence], b: Sequence[Sequence]) -> SandwichReport:
    """Check the two polar sandwiches for the polytopes co(a), co(b).

    (A+B)° ⊂ A°∩B° ⊂ 2(A+B)° and (A∩B)° ⊂ A°+B° ⊂ 2(A∩B)°, where the sum of
    two polyhedra is closed so no closure is needed.
    """
    A = Polyhedron.from_v(a)
    B = Polyhedron.from_v(b, A.dim)
    check_cap(A.dim)
    origin = tuple(Fraction(0) for _ in range(A.dim))
    if not A.contains(origin):
        raise OriginMissing("first polytope does not contain the origin")
    if not B.contains(origin):
        raise OriginMissing("second polytope does not contain the origin")

    S = Polyhedron.from_v([add(p, q) for p in A.vertices for q in B.vertices], A.dim)
    I = Polyhedron.from_h(A.halfspaces + B.halfspaces, A.dim)
    Ao, Bo = set_polar(A), set_polar(B)
    So, Io = set_polar(S), set_polar(I)
    meet = Polyhedron.from_h(Ao.halfspaces + Bo.halfspaces, A.dim)
    total = Polyhedron.from_v(
        [add(p, q) for p in Ao.vertices for q in Bo.vertices],
        A.dim,
        rays=Ao.rays + Bo.rays,
        lines=Ao.lines + Bo.lines,
    )
    pairs = {
        SANDWICH_NAMES[0]: (So, meet),
        SANDWICH_NAMES[1]: (meet, So.scaled(2)),
        SANDWICH_NAMES[2]: (Io, total),
        SANDWICH_NAMES[3]: (total, Io.scaled(2)),
    }
    inclusions = {k: p.subset_of(q) for k, (p, q) in pairs.items()}
    tight = {k: q.subset_of(p) for k, (p, q) in pairs.items()}
    sets = {"A": A, "B": B, "sum": S, "intersection": I, "polar_sum": So,
            "polar_intersection": Io, "polar_meet": meet, "sum_of_polars": total}
    return SandwichReport(inclusions, tight, sets)


# ---------------------------------------------------------------------------
# transversality of cones


@dataclass(frozen=True)
class Radius:
    """Bracket rho_inner^2 <= rho^2 <= rho_outer^2 for the largest ball in the difference."""

    rho_squared: Fraction
    rho_squared_upper: Fraction

    @property
    def decimal(self) -> tuple[float, float]:
        return float(self.rho_squared) ** 0.5, float(self.rho_squared_upper) ** 0.5

    def to_json(self) -> dict:
        lo, hi = self.decimal
        return {
            "verdict": "transversal",
            "rho_squared": fmt(self.rho_squared),
            "rho_squared_upper": fmt(self.rho_squared_upper),
            "rho_decimal": [round(lo, 12), round(hi, 12)],
        }


@dataclass(frozen=True)
class NotTransversal:
    witness: Halfspace

    def to_json(self) -> dict:
        return {"verdict": "not_transversal", "witness": self.witness.to_json()}


def l1_ball(n: int, r=1) -> list[Halfspace]:
    return [Halfspace(s, r) for s in product((Fraction(-1), Fraction(1)), repeat=n)]


def linf_ball(n: int, r=1) -> list[Halfspace]:
    out = []
    for i in range(n):
        out.append(Halfspace(unit(n, i), r))
        out.append(Halfspace(neg(unit(n, i)), r))
    return out


def truncate(c: PolyhedralCone, ball: str = "l1", r=1) -> Polyhedron:
    """The polytope c ∩ r·ball for ball in {"l1", "linf"}."""
    box = l1_ball(c.dim, r) if ball == "l1" else linf_ball(c.dim, r)
    return Polyhedron.from_h(list(c.h_rep) + box, c.dim)


def inradius(p: Polyhedron) -> Fraction | Halfspace:
    """Squared radius of the largest Euclidean ball at 0 inside p, or a halfspace
    through 0 containing p when that radius is zero.

    Requires 0 in p.
    """
    cands = []
    for e in p.equations:
        cands.append(Halfspace(e.normal).canonical())
        cands.append(Halfspace(neg(e.normal)).canonical())
    for h in p.facets:
        if h.offset <= 0:
            cands.append(Halfspace(h.normal).canonical())
    if cands:
        return min(cands, key=lambda h: tuple(h.normal))
    if not p.facets:
        raise ValueError("unbounded difference body")
    return min(h.offset ** 2 / norm_sq(h.normal) for h in p.facets)


def _difference_body(p1: Polyhedron, p2: Polyhedron, sign: int = -1) -> Polyhedron:
    pts = [add(p, scale(sign, q)) for p in p1.vertices for q in p2.vertices]
    return Polyhedron.from_v(pts, p1.dim)


def transversality_radius(c1: PolyhedralCone, c2: PolyhedralCone) -> Radius | NotTransversal:
    """Largest rho with rho·B ⊂ co((c1 ∩ B) − (c2 ∩ B)), bracketed exactly.

    The Euclidean ball is replaced by the cross-polytope (inner bound) and the
    cube (outer bound); both bounds have the same sign.
    """
    return _radius(c1, c2, -1)


def jameson_radius(c1: PolyhedralCone, c2: PolyhedralCone) -> Radius | NotTransversal:
    """Same bracket for co((c1 ∩ B) + (c2 ∩ B))."""
    return _radius(c1, c2, 1)


def _radius(c1, c2, sign):
    if c1.dim != c2.dim:
        raise InputError("dimension mismatch")
    inner = inradius(_difference_body(truncate(c1, "l1"), truncate(c2, "l1"), sign))
    outer = inradius(_difference_body(truncate(c1, "linf"), truncate(c2, "linf"), sign))
    if isinstance(outer, Halfspace):
        assert isinstance(inner, Halfspace), "bracket disagrees on transversality"
        return NotTransversal(outer)
    assert not isinstance(inner, Halfspace), "bracket disagrees on transversality"
    return Radius(inner, outer)


# ---------------------------------------------------------------------------
# zoo cones and the closedness probe


@dataclass(frozen=True)
class ZooCone:
    """A polyhedral cone, the second-order cone, a ray, or a linear subspace.

    ``second_order`` in R^n is {x : x_1^2 + ... + x_{n-1}^2 <= x_n^2, x_n >= 0}.
    """

    kind: str
    dim: int
    cone: PolyhedralCone | None = None
    direction: Vector | None = None
    basis: tuple = ()

    @classmethod
    def polyhedral(cls, c: PolyhedralCone) -> "ZooCone":
        return cls("polyhedral", c.dim, cone=c)

    @classmethod
    def second_order(cls, dim: int) -> "ZooCone":
        if dim < 3:
            raise InputError("second-order cone needs dimension >= 3")
        check_cap(dim)
        return cls("second_order", dim)

    @classmethod
    def ray(cls, v: Sequence) -> "ZooCone":
        v = vector(v)
        if is_zero(v):
            raise InputError("ray direction must be nonzero")
        return cls("ray", len(v), direction=v)

    @classmethod
    def subspace(cls, basis: Sequence[Sequence], dim: int | None = None) -> "ZooCone":
        b = tuple(vector(x) for x in basis)
        if dim is None:
            if not b:
                raise InputError("dimension required for the zero subspace")
            dim = len(b[0])
        check_dims(*b, dim=dim)
        return cls("subspace", dim, basis=b)

    def contains(self, x: Sequence) -> bool:
        if self.kind == "second_order":
            return x[-1] >= 0 and x[-1] ** 2 >= norm_sq(x[:-1])
        return self.as_polyhedral().contains(x)

    def as_polyhedral(self) -> PolyhedralCone:
        if self.kind == "polyhedral":
            return self.cone
        if self.kind == "ray":
            return PolyhedralCone.from_v([self.direction])
        if self.kind == "subspace":
            gens = list(self.basis) + [neg(b) for b in self.basis]
            return PolyhedralCone.from_v(gens, self.dim)
        raise UnsupportedPair("second-order cone is not polyhedral")

    def to_json(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.cone is not None:
            d["cone"] = self.cone.to_json()
        if self.direction is not None:
            d["direction"] = [fmt(x) for x in self.direction]
        if self.basis:
            d["basis"] = [[fmt(x) for x in b] for b in self.basis]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ZooCone":
        kind = d.get("kind")
        if kind == "polyhedral":
            return cls.polyhedral(PolyhedralCone.from_json(d["cone"]))
        if kind == "second_order":
            return cls.second_order(int(d["dim"]))
        if kind == "ray":
            return cls.ray(d["direction"])
        if kind == "subspace":
            return cls.subspace(d.get("basis", []), d.get("dim"))
        raise InputError(f"unknown zoo cone kind {kind!r}")


@dataclass
class Closed:
    reason: str
    sum_cone: PolyhedralCone | None = None

    def to_json(self) -> dict:
        d = {"verdict": "closed", "reason": self.reason}
        if self.sum_cone is not None:
            d["sum_cone"] = self.sum_cone.to_json()
        return d


@dataclass
class InSum:
    """w is attained: w = u + v with u, v in the two polars."""

    u: Vector
    v: Vector

    def to_json(self) -> dict:
        return {"verdict": "attained", "u": [fmt(x) for x in self.u], "v": [fmt(x) for x in self.v]}


@dataclass
class NotClosedEvidence:
    """u_k + v_k -> w with w outside the sum of polars.

    ``certificate`` holds the coefficients (a, b, c) of the Lorentz quadratic
    a s^2 + b s + c that must be >= 0 for a decomposition w = u + s d to exist;
    with a = b = 0 and c < 0 no s works.
    """

    w: Vector
    sequence: list
    certificate: dict

    @property
    def residuals(self) -> list[Fraction]:
        return [r for _, _, r in self.sequence]

    @property
    def component_norms_sq(self) -> list[Fraction]:
        return [norm_sq(u) for u, _, _ in self.sequence]

    def to_json(self) -> dict:
        return {
            "verdict": "not_closed",
            "w": [fmt(x) for x in self.w],
            "residuals": [fmt(r) for r in self.residuals],
            "component_norms_sq": [fmt(x) for x in self.component_norms_sq],
            "sequence": [
                {"u": [fmt(x) for x in u], "v": [fmt(x) for x in v], "residual": fmt(r)}
                for u, v, r in self.sequence
            ],
            "certificate": {k: fmt(v) if isinstance(v, Fraction) else v for k, v in self.certificate.items()},
        }


def _lorentz(a: Sequence, b: Sequence) -> Fraction:
    return a[-1] * b[-1] - dot(a[:-1], b[:-1])


def sum_closedness_probe(z1: ZooCone, z2: ZooCone, w: Sequence, k_max: int = 10):
    """Decide whether z1° + z2° is closed and, when it is not, build evidence at w."""
    w = vector(w)
    if z1.dim != z2.dim or len(w) != z1.dim:
        raise InputError("dimension mismatch")
    kinds = {z1.kind, z2.kind}
    if "second_order" not in kinds:
        s = minkowski_sum(polar(z1.as_polyhedral()), polar(z2.as_polyhedral()))
        return Closed("sum of two polyhedral cones is polyhedral", s)
    if kinds == {"second_order"}:
        raise UnsupportedPair("second-order + second-order")
    soc, other = (z1, z2) if z1.kind == "second_order" else (z2, z1)
    n = soc.dim
    if other.kind == "ray":
        return Closed("a second-order cone plus a halfspace is a preimage of a closed cone in R")
    if other.kind != "subspace":
        raise UnsupportedPair(f"second_order + {other.kind}")
    comp = nullspace(other.basis, n) if other.basis else [unit(n, i) for i in range(n)]
    if len(comp) == 0:
        return Closed("polar of the whole space is {0}")
    if len(comp) >= n - 1:
        return Closed("projection of a closed cone onto a line is closed")
    if len(comp) != 1:
        raise UnsupportedPair("second_order + subspace of codimension between 2 and n-2")
    d = comp[0]
    if d[-1] < 0:
        d = neg(d)
    Ld = _lorentz(d, d)
    if Ld != 0:
        return Closed("the line meets the cone only at 0 or through its interior")
    # boundary line: the polar sum is -K + span(d); w = u + s d needs s d - w in K
    B = _lorentz(d, w)
    Lw = _lorentz(w, w)
    cert = {"quadratic_a": Ld, "quadratic_b": -2 * B, "quadratic_c": Lw}
    s_min = w[-1] / d[-1]
    feasible_s = None
    if B < 0:
        feasible_s = max(s_min, Lw / (2 * B))
    elif B > 0:
        if s_min <= Lw / (2 * B):
            feasible_s = s_min
    elif Lw >= 0:
        feasible_s = s_min
    if feasible_s is not None:
        k = sub(scale(feasible_s, d), w)
        return InSum(neg(k), scale(feasible_s, d))
    if B != 0:
        raise UnsupportedPair("w lies outside the closure of the polar sum")
    seq = []
    s = max(Fraction(1), s_min + 1)
    prev = None
    for _ in range(k_max):
        while True:
            k = sub(scale(s, d), w)
            _, hi = sqrt_bounds(norm_sq(k[:-1]), bits=32 + 2 * int(s).bit_length())
            res = hi - k[-1]
            if prev is None or res <= prev / 2:
                break
            s *= 2
        u = tuple(-x for x in k[:-1]) + (-hi,)
        v = scale(s, d)
        seq.append((u, v, res))
        prev = res
        s *= 2
    return NotClosedEvidence(w, seq, cert)
