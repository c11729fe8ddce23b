"""Exact rational linear algebra, linear programming and polyhedral conversions.

Everything here works over :class:`fractions.Fraction`.  Vectors are plain
tuples of fractions; the double-description core works on primitive integer
vectors internally because it is the hot path of every cone computation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence

from .errors import InputError

MAX_DIM = 6

Vector = tuple  # tuple[Fraction, ...]


# ---------------------------------------------------------------------------
# rationals and vectors


def Q(x) -> Fraction:
    """Parse an int, Fraction or "p/q" string into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise InputError(f"not a rational: {x!r}") from exc
    if isinstance(x, float):
        raise InputError(f"floats are not accepted, use 'p/q' strings: {x!r}")
    raise InputError(f"not a rational: {x!r}")


def fmt(q: Fraction) -> str:
    q = Q(q)
    return f"{q.numerator}/{q.denominator}"


def vector(xs: Iterable) -> Vector:
    v = tuple(Q(x) for x in xs)
    if not v:
        raise InputError("empty vector")
    return v


def zero(n: int) -> Vector:
    return (Fraction(0),) * n


def unit(n: int, i: int) -> Vector:
    return tuple(Fraction(int(k == i)) for k in range(n))


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def add(a: Sequence, b: Sequence) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence, b: Sequence) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def scale(c, a: Sequence) -> Vector:
    return tuple(c * x for x in a)


def neg(a: Sequence) -> Vector:
    return tuple(-x for x in a)


def norm_sq(a: Sequence) -> Fraction:
    return dot(a, a)


def is_zero(a: Sequence) -> bool:
    return all(x == 0 for x in a)


def check_dims(*vecs: Sequence, dim: int | None = None) -> int:
    dims = {len(v) for v in vecs}
    if dim is not None:
        dims.add(dim)
    if len(dims) > 1:
        raise InputError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop() if dims else (dim or 0)


def check_cap(n: int, cap: int = MAX_DIM) -> None:
    if n < 1 or n > cap:
        raise InputError(f"ambient dimension {n} outside supported range 1..{cap}")


def primitive(v: Sequence) -> tuple[int, ...]:
    """Smallest integer vector with the same direction as ``v``."""
    fr = [Q(x) for x in v]
    den = reduce(lcm, (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(gcd, (abs(x) for x in ints), 0)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def _int_primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = reduce(gcd, (abs(x) for x in v), 0)
    if g <= 1:
        return tuple(v)
    return tuple(x // g for x in v)


def sqrt_bounds(q: Fraction, bits: int = 40) -> tuple[Fraction, Fraction]:
    """Rational lo <= sqrt(q) <= hi with hi - lo <= 2**-bits."""
    from math import isqrt

    q = Q(q)
    if q < 0:
        raise ValueError("negative square root")
    s = 1 << bits
    num = q.numerator * s * s
    r = isqrt(num // q.denominator)
    lo = Fraction(r, s)
    while lo * lo > q:
        r -= 1
        lo = Fraction(r, s)
    hi = Fraction(r + 1, s)
    return lo, hi


# ---------------------------------------------------------------------------
# small dense linear algebra


def rank(rows: Sequence[Sequence]) -> int:
    m = [[Fraction(x) for x in r] for r in rows]
    if not m:
        return 0
    ncol = len(m[0])
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pr = m[r]
        for i in range(r + 1, len(m)):
            f = m[i][c]
            if f:
                f = f / pr[c]
                m[i] = [a - f * b for a, b in zip(m[i], pr)]
        r += 1
        if r == len(m):
            break
    return r


def nullspace(rows: Sequence[Sequence], n: int) -> list[Vector]:
    """Basis of {x : row . x = 0 for every row}."""
    m = [[Fraction(x) for x in r] for r in rows if any(x != 0 for x in r)]
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][f]
        basis.append(tuple(v))
    return basis


def solve_square(a: Sequence[Sequence], b: Sequence) -> Vector | None:
    """Solve a x = b for square nonsingular a; None when singular."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(a, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        p = m[c][c]
        m[c] = [x / p for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return tuple(m[i][n] for i in range(n))


def project_out(v: Sequence, basis: Sequence[Sequence]) -> Vector:
    """Orthogonal projection of v onto the complement of span(basis)."""
    if not basis:
        return tuple(Fraction(x) for x in v)
    gram = [[dot(a, b) for b in basis] for a in basis]
    coef = solve_square(gram, [dot(a, v) for a in basis])
    if coef is None:
        raise ValueError("dependent basis")
    out = list(Fraction(x) for x in v)
    for c, a in zip(coef, basis):
        for i in range(len(out)):
            out[i] -= c * a[i]
    return tuple(out)


# ---------------------------------------------------------------------------
# linear programming


@dataclass(frozen=True)
class Halfspace:
    """The closed halfspace {x : <normal, x> <= offset}."""

    normal: Vector
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "normal", vector(self.normal))
        object.__setattr__(self, "offset", Q(self.offset))
        if is_zero(self.normal):
            raise InputError("halfspace normal must be nonzero")

    @property
    def dim(self) -> int:
        return len(self.normal)

    def value(self, x: Sequence) -> Fraction:
        return dot(self.normal, x) - self.offset

    def contains(self, x: Sequence) -> bool:
        return dot(self.normal, x) <= self.offset

    def canonical(self) -> "Halfspace":
        """Same halfspace with a primitive integer normal."""
        p = primitive(self.normal)
        k = next(Fraction(pi) / ni for pi, ni in zip(p, self.normal) if ni != 0)
        return Halfspace(tuple(Fraction(x) for x in p), self.offset * k)

    def flipped(self) -> "Halfspace":
        return Halfspace(neg(self.normal), -self.offset)

    def to_json(self) -> dict:
        return {"normal": [fmt(x) for x in self.normal], "offset": fmt(self.offset)}

    @classmethod
    def from_json(cls, d: dict) -> "Halfspace":
        return cls(vector(d["normal"]), Q(d.get("offset", 0)))


@dataclass(frozen=True)
class LinearProgram:
    objective: Vector
    constraints: tuple = ()
    sense: str = "min"

    def __post_init__(self):
        object.__setattr__(self, "objective", vector(self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.sense not in ("min", "max"):
            raise InputError(f"unknown sense {self.sense!r}")
        check_dims(self.objective, *(h.normal for h in self.constraints))


@dataclass(frozen=True)
class Optimum:
    value: Fraction
    point: Vector


@dataclass(frozen=True)
class Unbounded:
    pass


@dataclass(frozen=True)
class Infeasible:
    pass


def _pivot(T, basis, r, c):
    pr = T[r]
    p = pr[c]
    if p != 1:
        pr = [x / p for x in pr]
        T[r] = pr
    nz = [j for j, x in enumerate(pr) if x != 0]
    for i in range(len(T)):
        if i == r:
            continue
        row = T[i]
        f = row[c]
        if f:
            for j in nz:
                row[j] -= f * pr[j]
    basis[r] = c


def _run_simplex(T, basis, cost, ncols):
    """Bland-rule primal simplex on tableau T (last column = rhs)."""
    m = len(T) - 1  # last row is the objective row
    obj = T[m]
    for j in range(len(obj)):
        obj[j] = Fraction(0)
    for j in range(ncols):
        obj[j] = Fraction(cost[j])
    for i in range(m):
        cb = cost[basis[i]]
        if cb:
            row = T[i]
            for j in range(len(obj)):
                obj[j] -= cb * row[j]
    rhs = len(obj) - 1
    while True:
        enter = next((j for j in range(ncols) if obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][rhs] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def simplex_standard(A: Sequence[Sequence], b: Sequence, c: Sequence):
    """min c.z subject to A z = b, z >= 0.

    Returns ("optimal", z, value), ("infeasible",) or ("unbounded",).
    """
    m, n = len(A), len(c)
    T = []
    for i in range(m):
        row = [Fraction(x) for x in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-x for x in row]
            rhs = -rhs
        T.append(row + [Fraction(int(k == i)) for k in range(m)] + [rhs])
    T.append([Fraction(0)] * (n + m + 1))
    basis = [n + i for i in range(m)]
    if m:
        _run_simplex(T, basis, [0] * n + [1] * m, n + m)
        if T[m][-1] != 0:
            return ("infeasible",)
        # drive artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n:
                j = next((j for j in range(n) if T[i][j] != 0), None)
                if j is None:
                    continue
                _pivot(T, basis, i, j)
            keep.append(i)
        T = [T[i][:n] + [T[i][-1]] for i in keep] + [[Fraction(0)] * (n + 1)]
        basis = [basis[i] for i in keep]
    else:
        T = [[Fraction(0)] * (n + 1)]
    status = _run_simplex(T, basis, list(c), n)
    if status == "unbounded":
        return ("unbounded",)
    z = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        z[bv] = T[i][-1]
    return ("optimal", tuple(z), dot(c, z))


def _free_lp(c, ub: Sequence[tuple], eq: Sequence[tuple] = ()):
    """min c.x over free x with rows (a, b): a.x <= b and (a, b): a.x = b."""
    n = len(c)
    rows, rhs = [], []
    k = len(ub)
    for i, (a, bb) in enumerate(ub):
        rows.append(list(a) + [-x for x in a] + [int(j == i) for j in range(k)])
        rhs.append(bb)
    for a, bb in eq:
        rows.append(list(a) + [-x for x in a] + [0] * k)
        rhs.append(bb)
    cost = list(c) + [-x for x in c] + [0] * k
    res = simplex_standard(rows, rhs, cost)
    if res[0] != "optimal":
        return res
    z = res[1]
    x = tuple(z[i] - z[n + i] for i in range(n))
    return ("optimal", x, res[2])


def lp_solve(lp: LinearProgram) -> Optimum | Unbounded | Infeasible:
    """Solve an LP over free variables exactly."""
    c = lp.objective if lp.sense == "min" else neg(lp.objective)
    res = _free_lp(c, [(h.normal, h.offset) for h in lp.constraints])
    if res[0] == "infeasible":
        return Infeasible()
    if res[0] == "unbounded":
        return Unbounded()
    x = res[1]
    return Optimum(dot(lp.objective, x), x)


def find_point(ub: Sequence[tuple], eq: Sequence[tuple] = (), n: int | None = None) -> Vector | None:
    """Some x with a.x <= b for ub rows and a.x = b for eq rows, else None."""
    if n is None:
        n = len((list(ub) + list(eq))[0][0])
    res = _free_lp([0] * n, ub, eq)
    return res[1] if res[0] == "optimal" else None


def conic_combination(generators: Sequence[Sequence], target: Sequence) -> tuple | None:
    """Nonnegative weights w with sum w_i g_i = target, or None."""
    n = len(target)
    if not generators:
        return () if is_zero(target) else None
    A = [[g[i] for g in generators] for i in range(n)]
    res = simplex_standard(A, list(target), [0] * len(generators))
    return res[1] if res[0] == "optimal" else None


def polyhedral_combination(points, rays, target) -> tuple | None:
    """Weights (lam, mu): lam >= 0 summing to one on points, mu >= 0 on rays."""
    n = len(target)
    k = len(points)
    if k == 0:
        return None
    cols = list(points) + list(rays)
    A = [[g[i] for g in cols] for i in range(n)]
    A.append([1] * k + [0] * len(rays))
    res = simplex_standard(A, list(target) + [1], [0] * len(cols))
    if res[0] != "optimal":
        return None
    return res[1][:k], res[1][k:]


# ---------------------------------------------------------------------------
# double description


def _to_int_rows(rows: Sequence[Sequence]) -> list[tuple[int, ...]]:
    out = []
    for r in rows:
        p = primitive(r)
        if any(p):
            out.append(p)
    return out


def _idot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def extreme_rays(rows: Sequence[Sequence], n: int) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Generators of {x : a.x <= 0 for a in rows}.

    Returns (rays, lines): the cone is cone(rays) + span(lines), with rays
    extreme modulo the lineality space and orthogonal to it.
    """
    A = list(dict.fromkeys(_to_int_rows(rows)))
    lines: list[tuple[int, ...]] = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    rays: list[tuple[int, ...]] = []
    done: list[tuple[int, ...]] = []
    for a in A:
        pidx = next((i for i, l in enumerate(lines) if _idot(a, l) != 0), None)
        if pidx is not None:
            p = lines[pidx]
            ap = _idot(a, p)
            if ap > 0:
                p = tuple(-x for x in p)
                ap = -ap
            newlines = []
            for i, l in enumerate(lines):
                if i == pidx:
                    continue
                cl = _idot(a, l)
                if cl:
                    l = _int_primitive(tuple(ap * x - cl * y for x, y in zip(l, p)))
                newlines.append(l)
            newrays = []
            for r in rays:
                cr = _idot(a, r)
                if cr:
                    r = _int_primitive(tuple(-ap * x + cr * y for x, y in zip(r, p)))
                newrays.append(r)
            newrays.append(p)
            rays, lines = newrays, newlines
        else:
            vals = [_idot(a, r) for r in rays]
            pos = [r for r, v in zip(rays, vals) if v > 0]
            keep = [r for r, v in zip(rays, vals) if v <= 0]
            negs = [(r, v) for r, v in zip(rays, vals) if v < 0]
            rk = n - len(lines)
            if pos and negs and rk >= 2:
                tight = {r: frozenset(i for i, d in enumerate(done) if _idot(d, r) == 0) for r in rays}
                for p in pos:
                    vp = _idot(a, p)
                    for q, vq in negs:
                        z = tight[p] & tight[q]
                        if len(z) < rk - 2:
                            continue
                        if rank([done[i] for i in z]) != rk - 2:
                            continue
                        keep.append(_int_primitive(tuple(vp * x - vq * y for x, y in zip(q, p))))
            rays = list(dict.fromkeys(keep))
        done.append(a)
    return _canonical_rays(rays, lines), lines


def _canonical_rays(rays, lines):
    if not lines:
        return sorted(set(rays))
    basis = [tuple(Fraction(x) for x in l) for l in lines]
    out = set()
    for r in rays:
        p = primitive(project_out(r, basis))
        if any(p):
            out.add(p)
    return sorted(out)


def h_to_v(halfspaces: Sequence[Halfspace], n: int | None = None) -> list[Vector]:
    """Generators of the homogeneous cone {x : <a, x> <= 0}.

    Lineality directions are returned as +/- pairs.
    """
    hs = list(halfspaces)
    if n is None:
        if not hs:
            raise InputError("dimension required for an empty constraint list")
        n = hs[0].dim
    check_dims(*(h.normal for h in hs), dim=n)
    check_cap(n)
    if any(h.offset != 0 for h in hs):
        raise InputError("double description needs homogeneous halfspaces (offset 0)")
    return _gens_from_rows([h.normal for h in hs], n)


def _gens_from_rows(rows, n) -> list[Vector]:
    rays, lines = extreme_rays(rows, n)
    gens = [tuple(Fraction(x) for x in r) for r in rays]
    for l in lines:
        gens.append(tuple(Fraction(x) for x in l))
        gens.append(tuple(Fraction(-x) for x in l))
    return gens


def v_to_h(generators: Sequence[Sequence], n: int) -> list[Halfspace]:
    """Irredundant halfspaces {<a, x> <= 0} describing cone(generators).

    Equations appear as a +/- pair of halfspaces.
    """
    check_dims(*generators, dim=n)
    check_cap(n)
    return _facets_from_gens(generators, n)


def _facets_from_gens(generators, n) -> list[Halfspace]:
    rays, lines = extreme_rays(generators, n)
    out = [Halfspace(tuple(Fraction(x) for x in r)) for r in rays]
    for l in lines:
        out.append(Halfspace(tuple(Fraction(x) for x in l)))
        out.append(Halfspace(tuple(Fraction(-x) for x in l)))
    return out


def double_description(cone_h: Sequence[Halfspace], n: int | None = None) -> list[Vector]:
    """H-representation -> generators (see :func:`h_to_v`)."""
    return h_to_v(cone_h, n)


# ---------------------------------------------------------------------------
# polyhedra via homogenisation


@dataclass
class Polyhedron:
    """A polyhedron held in both representations.

    ``facets`` are inequalities, ``equations`` are halfspaces read as
    equalities <a, x> = b.  ``vertices``/``rays``/``lines`` form the
    Minkowski-Weyl generators.  An empty polyhedron has no vertices.
    """

    dim: int
    facets: list = field(default_factory=list)
    equations: list = field(default_factory=list)
    vertices: list = field(default_factory=list)
    rays: list = field(default_factory=list)
    lines: list = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def is_bounded(self) -> bool:
        return not self.rays and not self.lines

    @property
    def halfspaces(self) -> list[Halfspace]:
        out = list(self.facets)
        for e in self.equations:
            out.append(e)
            out.append(e.flipped())
        return out

    def contains(self, x: Sequence) -> bool:
        if self.is_empty:
            return False
        return all(h.contains(x) for h in self.facets) and all(
            dot(e.normal, x) == e.offset for e in self.equations
        )

    def subset_of(self, other: "Polyhedron") -> bool:
        """Exact inclusion: generators of self against the inequalities of other."""
        if self.is_empty:
            return True
        if other.is_empty:
            return False
        if not all(other.contains(v) for v in self.vertices):
            return False
        hs = other.halfspaces
        for r in self.rays:
            if any(dot(h.normal, r) > 0 for h in hs):
                return False
        for l in self.lines:
            if any(dot(h.normal, l) != 0 for h in hs):
                return False
        return True

    def equals(self, other: "Polyhedron") -> bool:
        return self.subset_of(other) and other.subset_of(self)

    def scaled(self, c) -> "Polyhedron":
        c = Q(c)
        if c <= 0:
            raise InputError("scale factor must be positive")
        return Polyhedron(
            self.dim,
            [Halfspace(h.normal, h.offset * c) for h in self.facets],
            [Halfspace(h.normal, h.offset * c) for h in self.equations],
            [scale(c, v) for v in self.vertices],
            list(self.rays),
            list(self.lines),
        )

    @classmethod
    def from_h(cls, halfspaces: Sequence[Halfspace], n: int, equations: Sequence[Halfspace] = ()) -> "Polyhedron":
        """Polyhedron {x : <a,x> <= b} (and <a,x> = b for ``equations``)."""
        hs = list(halfspaces)
        for e in equations:
            hs.append(e)
            hs.append(e.flipped())
        check_dims(*(h.normal for h in hs), dim=n)
        gens = _homog_gens(hs, n)
        if gens is None:
            return cls(n)
        facets, eqs = _homog_facets(n, *gens)
        return cls(n, facets, eqs, *gens)

    @classmethod
    def from_v(cls, points: Sequence[Sequence], n: int | None = None, rays: Sequence = (), lines: Sequence = ()) -> "Polyhedron":
        pts = [vector(p) for p in points]
        if not pts:
            raise InputError("a polyhedron needs at least one point")
        if n is None:
            n = len(pts[0])
        rays = [vector(r) for r in rays]
        lines = [vector(l) for l in lines]
        check_dims(*pts, *rays, *lines, dim=n)
        facets, eqs = _homog_facets(n, pts, rays, lines)
        hs = list(facets)
        for e in eqs:
            hs.append(e)
            hs.append(e.flipped())
        gens = _homog_gens(hs, n)
        return cls(n, facets, eqs, *gens)


def _homog_gens(hs: Sequence[Halfspace], n: int):
    rows = [tuple(h.normal) + (-h.offset,) for h in hs]
    rows.append(tuple([0] * n) + (-1,))
    rays, lines = extreme_rays(rows, n + 1)
    verts, rr = [], []
    for r in rays:
        if r[n] > 0:
            verts.append(tuple(Fraction(x, r[n]) for x in r[:n]))
        else:
            rr.append(tuple(Fraction(x) for x in r[:n]))
    if not verts:
        return None
    ll = [tuple(Fraction(x) for x in l[:n]) for l in lines]
    return sorted(verts), sorted(rr), sorted(ll)


def _homog_facets(n, verts, rays, lines):
    gens = [tuple(v) + (Fraction(1),) for v in verts]
    gens += [tuple(r) + (Fraction(0),) for r in rays]
    for l in lines:
        gens.append(tuple(l) + (Fraction(0),))
        gens.append(neg(l) + (Fraction(0),))
    frays, flines = extreme_rays(gens, n + 1)
    facets, eqs = [], []
    for f in frays:
        a = tuple(Fraction(x) for x in f[:n])
        if not is_zero(a):
            facets.append(Halfspace(a, Fraction(-f[n])))
    for f in flines:
        a = tuple(Fraction(x) for x in f[:n])
        if not is_zero(a):
            eqs.append(Halfspace(a, Fraction(-f[n])))
    return facets, eqs


def convex_hull(points: Sequence[Sequence]) -> Polyhedron:
    """Facet description of co(points); lower-dimensional hulls carry equations."""
    pts = [vector(p) for p in points]
    if not pts:
        raise InputError("convex hull of an empty point list")
    n = check_dims(*pts)
    check_cap(n)
    return Polyhedron.from_v(pts, n)
