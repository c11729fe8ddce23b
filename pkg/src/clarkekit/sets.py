"""Locally conical closed sets and their exact Clarke tangent and normal cones.

A :class:`UnionSet` is x0 + (P_1 ∪ ... ∪ P_k) near x0, each P_i a polyhedral
cone.  The contingent cone is constant on each cell of the hyperplane
arrangement spanned by all facet normals, so the liminf defining the Clarke
cone reduces to a finite intersection over cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cones import PolyhedralCone, intersect, polar
from .errors import InputError, PointNotInSet
from .geometry import (
    Halfspace,
    Vector,
    add,
    check_cap,
    conic_combination,
    dot,
    find_point,
    fmt,
    neg,
    nullspace,
    primitive,
    sub,
    unit,
    vector,
    zero,
)


@dataclass(frozen=True, eq=False)
class UnionSet:
    pieces: tuple
    basepoint: Vector

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise InputError("a union set needs at least one piece")
        bp = vector(self.basepoint)
        n = len(bp)
        check_cap(n)
        for p in pieces:
            if p.dim != n:
                raise InputError("piece dimension differs from basepoint dimension")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "basepoint", bp)

    @classmethod
    def of(cls, pieces: Sequence[PolyhedralCone], basepoint: Sequence | None = None) -> "UnionSet":
        pieces = list(pieces)
        if not pieces:
            raise InputError("a union set needs at least one piece")
        if basepoint is None:
            basepoint = zero(pieces[0].dim)
        return cls(tuple(pieces), vector(basepoint))

    @classmethod
    def from_halfspaces(cls, pieces: Sequence[Sequence], basepoint: Sequence | None = None, dim: int | None = None):
        """Each piece given as a list of normals a meaning <a, x - x0> <= 0."""
        if dim is None:
            dim = len(basepoint) if basepoint is not None else len(pieces[0][0])
        cones = [PolyhedralCone.from_h([Halfspace(a) for a in p], dim) for p in pieces]
        return cls.of(cones, basepoint)

    @property
    def dim(self) -> int:
        return len(self.basepoint)

    def contains(self, p: Sequence) -> bool:
        d = sub(p, self.basepoint)
        return any(c.contains(d) for c in self.pieces)

    def intersection(self, other: "UnionSet") -> "UnionSet":
        if self.basepoint != other.basepoint:
            raise InputError("sets must share the basepoint")
        return UnionSet.of([intersect(p, q) for p in self.pieces for q in other.pieces], self.basepoint)

    def to_json(self) -> dict:
        return {
            "basepoint": [fmt(x) for x in self.basepoint],
            "pieces": [{"h_rep": [[fmt(x) for x in h.normal] for h in c.h_rep]} for c in self.pieces],
        }

    @classmethod
    def from_json(cls, d: dict) -> "UnionSet":
        if not isinstance(d, dict) or "pieces" not in d:
            raise InputError("set needs 'pieces'")
        bp = d.get("basepoint")
        dim = len(bp) if bp is not None else d.get("dim")
        if dim is None:
            raise InputError("set needs 'basepoint' or 'dim'")
        pieces = []
        for i, p in enumerate(d["pieces"]):
            if not isinstance(p, dict):
                raise InputError(f"pieces[{i}] must be an object")
            try:
                if "v_rep" in p:
                    pieces.append(PolyhedralCone.from_v([vector(g) for g in p["v_rep"]], dim))
                elif "h_rep" in p:
                    hs = [Halfspace.from_json(h) if isinstance(h, dict) else Halfspace(vector(h)) for h in p["h_rep"]]
                    pieces.append(PolyhedralCone.from_h(hs, dim))
                else:
                    raise InputError("needs h_rep or v_rep")
            except InputError as exc:
                raise InputError(f"pieces[{i}]: {exc}") from exc
        return cls.of(pieces, bp if bp is not None else zero(dim))


# ---------------------------------------------------------------------------
# tangent cones of pieces


def piece_tangent_cone(c: PolyhedralCone, d: Sequence) -> PolyhedralCone:
    """Tangent cone of the cone c at its point d: keep constraints active at d."""
    active = [h for h in c.h_rep if dot(h.normal, d) == 0]
    return PolyhedralCone.from_h(active, c.dim)


def bouligand_cone_at(u: UnionSet, y: Sequence) -> list[PolyhedralCone]:
    y = vector(y)
    d = sub(y, u.basepoint)
    out = [piece_tangent_cone(c, d) for c in u.pieces if c.contains(d)]
    if not out:
        raise PointNotInSet(f"{[fmt(x) for x in y]} is not in the set")
    return out


# ---------------------------------------------------------------------------
# arrangement cells


@dataclass
class Cell:
    signs: tuple
    point: Vector
    pieces: tuple


@dataclass
class CellDecomposition:
    hyperplanes: list
    cells: list
    lineality: list = field(default_factory=list)


def _hyperplanes(u: UnionSet) -> list[tuple[int, ...]]:
    seen = {}
    for c in u.pieces:
        for h in c.h_rep:
            p = primitive(h.normal)
            if next(x for x in p if x) < 0:
                p = tuple(-x for x in p)
            seen.setdefault(p, None)
    return list(seen)


def arrangement_cells(normals: Sequence[tuple], n: int) -> list[tuple[tuple, Vector]]:
    """All realised sign vectors of the central arrangement with a point in each."""
    cells = [((), zero(n))]
    for k, a in enumerate(normals):
        nxt = []
        for signs, pt in cells:
            have = dot(a, pt)
            s_have = (have > 0) - (have < 0)
            nxt.append((signs + (s_have,), pt))
            for s in (-1, 0, 1):
                if s == s_have:
                    continue
                new = signs + (s,)
                q = _realise(normals[: k + 1], new, n)
                if q is not None:
                    nxt.append((new, q))
        cells = nxt
    return cells


def _realise(normals, signs, n):
    ub, eq = [], []
    for a, s in zip(normals, signs):
        if s == 0:
            eq.append((a, 0))
        elif s < 0:
            ub.append((a, -1))
        else:
            ub.append((tuple(-x for x in a), -1))
    if not ub and not eq:
        return zero(n)
    return find_point(ub, eq, n)


def _oriented(hyper_index: dict, normal: Sequence) -> tuple[int, int]:
    p = primitive(normal)
    if p in hyper_index:
        return hyper_index[p], 1
    return hyper_index[tuple(-x for x in p)], -1


def cell_decomposition(u: UnionSet) -> CellDecomposition:
    hyper = _hyperplanes(u)
    n = u.dim
    raw = arrangement_cells(hyper, n)
    index = {h: i for i, h in enumerate(hyper)}
    piece_rows = [[_oriented(index, h.normal) for h in c.h_rep] for c in u.pieces]
    cells = []
    for signs, pt in raw:
        inside = tuple(
            j for j, rows in enumerate(piece_rows) if all(o * signs[i] <= 0 for i, o in rows)
        )
        cells.append(Cell(signs, pt, inside))
    lineality = nullspace(hyper, n) if hyper else [unit(n, i) for i in range(n)]
    return CellDecomposition(hyper, cells, lineality)


def clarke_tangent_cone(u: UnionSet) -> PolyhedralCone:
    """Exact Clarke tangent cone of u at its basepoint."""
    if len(u.pieces) == 1:
        return u.pieces[0]
    dec = cell_decomposition(u)
    index = {h: i for i, h in enumerate(dec.hyperplanes)}
    piece_rows = [[_oriented(index, h.normal) for h in c.h_rep] for c in u.pieces]
    set_cells = [c for c in dec.cells if c.pieces]

    def tangent_at(cell, target_signs):
        for j in cell.pieces:
            if all(o * target_signs[i] <= 0 for i, o in piece_rows[j] if cell.signs[i] == 0):
                return True
        return False

    flags = [all(tangent_at(s, c.signs) for s in set_cells) for c in dec.cells]
    gens = [c.point for c, ok in zip(dec.cells, flags) if ok]
    for l in dec.lineality:
        gens.append(l)
        gens.append(neg(l))
    cone = PolyhedralCone.from_v(gens, u.dim)
    for c, ok in zip(dec.cells, flags):
        if not ok and cone.contains(c.point):
            raise AssertionError("cell analysis produced a non-convex Clarke cone")
    return cone


def clarke_normal_cone(u: UnionSet) -> PolyhedralCone:
    return polar(clarke_tangent_cone(u))


# ---------------------------------------------------------------------------
# intersection properties


@dataclass
class InclusionReport:
    holds: bool
    lhs: PolyhedralCone
    rhs: PolyhedralCone
    violating: Vector | None = None
    equality: bool = False

    def to_json(self) -> dict:
        d = {
            "holds": self.holds,
            "equality": self.equality,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
        }
        if self.violating is not None:
            d["violating_direction"] = [fmt(x) for x in self.violating]
        return d


def cone_inclusion(lhs: PolyhedralCone, rhs: PolyhedralCone) -> InclusionReport:
    bad = next((g for g in lhs.v_rep if not rhs.contains(g)), None)
    holds = bad is None
    return InclusionReport(holds, lhs, rhs, bad, holds and rhs.subset_of(lhs))


def verify_tangential_intersection(a: UnionSet, b: UnionSet) -> InclusionReport:
    """Is T̂_A ∩ T̂_B ⊆ T̂_{A∩B}?"""
    both = intersect(clarke_tangent_cone(a), clarke_tangent_cone(b))
    return cone_inclusion(both, clarke_tangent_cone(a.intersection(b)))


@dataclass
class DecompositionReport:
    normal_cone: PolyhedralCone
    n_a: PolyhedralCone
    n_b: PolyhedralCone
    rows: list
    hypotheses: object = None

    @property
    def holds(self) -> bool:
        return all(dec is not None for _, dec in self.rows)

    @property
    def hypotheses_certified(self) -> bool:
        return bool(self.hypotheses is not None and self.hypotheses.certified)

    def to_json(self) -> dict:
        rows = []
        for g, dec in self.rows:
            r = {"generator": [fmt(x) for x in g], "decomposes": dec is not None}
            if dec is not None:
                r["n_a"] = [fmt(x) for x in dec[0]]
                r["n_b"] = [fmt(x) for x in dec[1]]
            rows.append(r)
        d = {"holds": self.holds, "sum_closed": True, "rows": rows}
        if self.hypotheses is not None:
            d["hypotheses"] = self.hypotheses.to_json()
        return d


def decompose(g: Sequence, c1: PolyhedralCone, c2: PolyhedralCone) -> tuple[Vector, Vector] | None:
    """Write g = p + q with p in c1 and q in c2, or return None."""
    gens = list(c1.v_rep) + list(c2.v_rep)
    w = conic_combination(gens, g)
    if w is None:
        return None
    n = len(g)
    p = zero(n)
    for wi, v in zip(w[: len(c1.v_rep)], c1.v_rep):
        p = add(p, tuple(wi * x for x in v))
    return p, sub(g, p)


def verify_normal_intersection(a: UnionSet, b: UnionSet, hypotheses: bool = True) -> DecompositionReport:
    """Decompose each generator of N_{A∩B} over N_A + N_B.

    The sum of two polyhedral cones is closed, so no closure is taken.
    """
    na, nb = clarke_normal_cone(a), clarke_normal_cone(b)
    nab = clarke_normal_cone(a.intersection(b))
    rows = [(g, decompose(g, na, nb)) for g in nab.v_rep]
    hyp = None
    if hypotheses:
        from .transversality import certify_hypotheses

        hyp = certify_hypotheses(a, b)
    return DecompositionReport(nab, na, nb, rows, hyp)
