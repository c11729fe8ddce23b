"""Sampling testers for the epsilon-delta-lambda tangent-set conditions.

A tester draws points x of S near x0, directions v from a polytope d and step
sizes t from a dyadic grid, and asks whether the ball x + t(v + eps*B) meets
S.  For union-of-cone oracles that question is answered exactly via the
Euclidean distance to each piece; for other oracles a fixed search pattern
is used and a miss is only ever reported as inconclusive.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from .errors import InputError, SamplingStarved
from .geometry import (
    Q,
    Vector,
    add,
    dot,
    fmt,
    norm_sq,
    rank,
    scale,
    solve_square,
    sub,
    unit,
    vector,
    zero,
)
from .sets import UnionSet


# ---------------------------------------------------------------------------
# exact distance to a polyhedral cone


class _ConeDistance:
    """Squared distance from a point to cone(G), by enumerating the faces.

    The nearest point is the projection of p onto span(G_S) for some linearly
    independent subset S carrying nonnegative weights, so the minimum over
    those candidates is exact.
    """

    def __init__(self, gens: Sequence[Vector], n: int):
        self.n = n
        self.faces = []
        gens = list(gens)
        for k in range(1, n + 1):
            for sub_ in combinations(gens, k):
                if rank(sub_) < k:
                    continue
                gram = [[dot(a, b) for b in sub_] for a in sub_]
                inv_cols = [solve_square(gram, unit(k, j)) for j in range(k)]
                # row i of (G^T G)^{-1}
                inv = [[inv_cols[j][i] for j in range(k)] for i in range(k)]
                self.faces.append((sub_, inv))

    def dist_sq(self, p: Sequence) -> Fraction:
        best = norm_sq(p)
        for gens, inv in self.faces:
            if best == 0:
                break
            gp = [dot(g, p) for g in gens]
            lam = [dot(row, gp) for row in inv]
            if any(x < 0 for x in lam):
                continue
            y = zero(self.n)
            for l, g in zip(lam, gens):
                y = add(y, scale(l, g))
            d = norm_sq(sub(p, y))
            if d < best:
                best = d
        return best


def _halton(i: int, base: int) -> Fraction:
    f, r = Fraction(1), Fraction(0)
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


_PRIMES = (2, 3, 5, 7, 11, 13)


def search_pattern(n: int, size: int = 32) -> list[Vector]:
    """Deterministic points of the closed unit ball: center, axes, Halton cloud."""
    pts = [zero(n)]
    for i in range(n):
        for s in (1, -1, Fraction(1, 2), Fraction(-1, 2)):
            pts.append(scale(s, unit(n, i)))
    for i in range(1, size + 1):
        h = tuple((2 * _halton(i, _PRIMES[j]) - 1) / n for j in range(n))
        pts.append(h)
    return pts


@dataclass(frozen=True)
class MembershipOracle:
    eval: Callable
    description: str
    dim: int
    union: UnionSet | None = field(default=None, compare=False)

    def __call__(self, x: Sequence) -> bool:
        return bool(self.eval(x))

    @property
    def exact(self) -> bool:
        return self.union is not None

    @classmethod
    def from_union(cls, u: UnionSet, description: str = "union of polyhedral cones") -> "MembershipOracle":
        return cls(u.contains, description, u.dim, u)

    @classmethod
    def from_pwa_sublevel(cls, f, level=0) -> "MembershipOracle":
        level = Q(level)

        def ev(x):
            v = f.value(x)
            return v is not None and v <= level

        return cls(ev, f"sublevel set {{f <= {fmt(level)}}}", f.dim)

    @classmethod
    def from_gallery(cls, name: str) -> "MembershipOracle":
        from .gallery import gallery_set

        return cls.from_union(gallery_set(name), name)

    def _distances(self):
        cache = self.__dict__.get("_dist")
        if cache is None:
            cache = [_ConeDistance(c.v_rep, self.dim) for c in self.union.pieces]
            object.__setattr__(self, "_dist", cache)
        return cache

    def ball_meets(self, center: Sequence, radius_sq: Fraction) -> bool | None:
        """Does the closed ball meet the set?  None means undecided."""
        if self(center):
            return True
        if self.union is not None:
            d = sub(center, self.union.basepoint)
            return any(c.dist_sq(d) <= radius_sq for c in self._distances())
        if radius_sq == 0:
            return False
        r = _sqrt_lower(radius_sq)
        for p in search_pattern(self.dim)[1:]:
            if self(add(center, scale(r, p))):
                return True
        return None


def _sqrt_lower(q: Fraction) -> Fraction:
    from .geometry import sqrt_bounds

    return sqrt_bounds(q, bits=30)[0]


# ---------------------------------------------------------------------------
# samplers


def _l1(v: Sequence) -> Fraction:
    return sum(abs(x) for x in v)


def sample_points(oracle: MembershipOracle, x0: Sequence, delta, count: int, rng: random.Random) -> list[Vector]:
    """x0 plus ``count - 1`` points of S within Euclidean distance delta of x0."""
    x0 = vector(x0)
    delta = Q(delta)
    pts = [x0] if oracle(x0) else []
    n = len(x0)
    if oracle.union is not None and oracle.union.basepoint == x0:
        pieces = [c for c in oracle.union.pieces if c.v_rep]
        while len(pts) < count:
            if not pieces:
                pts.append(x0)
                continue
            c = rng.choice(pieces)
            k = rng.randint(1, min(len(c.v_rep), n))
            gens = rng.sample(c.v_rep, k)
            y = zero(n)
            for g in gens:
                y = add(y, scale(rng.randint(1, 16), g))
            norm1 = _l1(y)
            if norm1 == 0:
                pts.append(x0)
                continue
            u = Fraction(rng.randint(1, 64), 64)
            pts.append(add(x0, scale(delta * u / norm1, y)))
        return pts
    misses = 0
    while len(pts) < count:
        off = tuple(Fraction(rng.randint(-256, 256), 256) * delta / n for _ in range(n))
        p = add(x0, off)
        if oracle(p):
            pts.append(p)
            misses = 0
        else:
            misses += 1
            if misses > 50 * count:
                break
    if not pts:
        raise SamplingStarved("no point of the set found near x0")
    return pts


def sample_directions(d: Sequence[Sequence], rng: random.Random, extra: int = 4) -> list[Vector]:
    """Vertices of co(d) followed by a few random convex combinations."""
    verts = [vector(v) for v in d]
    out = list(verts)
    if len(verts) > 1:
        for _ in range(extra):
            w = [rng.randint(0, 8) for _ in verts]
            s = sum(w)
            if s == 0:
                continue
            v = zero(len(verts[0]))
            for wi, p in zip(w, verts):
                v = add(v, scale(Fraction(wi, s), p))
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Counterexample:
    x: Vector
    v: Vector
    t: Fraction
    verified: bool

    def to_json(self) -> dict:
        return {
            "x": [fmt(c) for c in self.x],
            "v": [fmt(c) for c in self.v],
            "t": fmt(self.t),
            "verified": self.verified,
        }


@dataclass(frozen=True)
class OracleVerdict:
    parameters: dict
    status: str  # passed | failed | inconclusive
    counterexample: Counterexample | None = None
    coverage: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    def to_json(self) -> dict:
        params = {k: fmt(v) if isinstance(v, Fraction) else v for k, v in self.parameters.items()}
        d = {"status": self.status, "passed": self.passed, "parameters": params,
             "exact": bool(self.coverage.get("exact")), "coverage": self.coverage}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample.to_json()
        return d


def _params(eps, delta, lam, trials, seed):
    eps, delta, lam = Q(eps), Q(delta), Q(lam)
    if eps <= 0 or delta <= 0 or lam <= 0:
        raise InputError("eps, delta and lambda must be positive")
    if trials < 1:
        raise InputError("trials must be positive")
    return eps, delta, lam


def check_uts(oracle: MembershipOracle, x0: Sequence, d: Sequence[Sequence], eps, delta, lam,
              trials: int = 200, seed: int = 0, levels: int = 6) -> OracleVerdict:
    """Uniform test: every sampled (v, x, t) must find S in x + t(v + eps*B)."""
    eps, delta, lam = _params(eps, delta, lam, trials, seed)
    rng = random.Random(seed)
    params = {"eps": eps, "delta": delta, "lambda": lam, "trials": trials, "seed": seed}
    if not d:
        return OracleVerdict(params, "passed", coverage={"triples": 0, "exact": oracle.exact})
    dirs = sample_directions(d, rng)
    xs = sample_points(oracle, x0, delta, trials, rng)
    ts = [lam / 2 ** j for j in range(levels)]
    count = 0
    undecided = None
    for v in dirs:
        for x in xs:
            for t in ts:
                count += 1
                hit = oracle.ball_meets(add(x, scale(t, v)), (t * eps) ** 2)
                if hit is False:
                    cov = {"triples": count, "points": len(xs), "directions": len(dirs), "exact": oracle.exact}
                    return OracleVerdict(params, "failed", Counterexample(x, v, t, True), cov)
                if hit is None and undecided is None:
                    undecided = Counterexample(x, v, t, False)
    cov = {"triples": count, "points": len(xs), "directions": len(dirs), "exact": oracle.exact}
    if undecided is not None:
        return OracleVerdict(params, "inconclusive", undecided, cov)
    return OracleVerdict(params, "passed", coverage=cov)


def check_uts_sequential(oracle: MembershipOracle, x0: Sequence, d: Sequence[Sequence], eps, delta,
                         trials: int = 200, seed: int = 0, lam0=1, levels: int = 6, tail: int = 3) -> OracleVerdict:
    """Sequential test: for each (v, x) some t among the finest ``tail`` dyadic
    steps lam0 * 2^-m must find S in x + t(v + eps*B)."""
    eps, delta, lam0 = _params(eps, delta, lam0, trials, seed)
    rng = random.Random(seed)
    params = {"eps": eps, "delta": delta, "lambda0": lam0, "trials": trials, "seed": seed}
    if not d:
        return OracleVerdict(params, "passed", coverage={"pairs": 0, "exact": oracle.exact})
    dirs = sample_directions(d, rng)
    xs = sample_points(oracle, x0, delta, trials, rng)
    ts = [lam0 / 2 ** j for j in range(levels)][-tail:]
    undecided = None
    count = 0
    for v in dirs:
        for x in xs:
            count += 1
            results = [oracle.ball_meets(add(x, scale(t, v)), (t * eps) ** 2) for t in ts]
            if any(r is True for r in results):
                continue
            if all(r is False for r in results):
                cov = {"pairs": count, "points": len(xs), "directions": len(dirs), "exact": oracle.exact}
                return OracleVerdict(params, "failed", Counterexample(x, v, ts[-1], True), cov)
            if undecided is None:
                undecided = Counterexample(x, v, ts[-1], False)
    cov = {"pairs": count, "points": len(xs), "directions": len(dirs), "exact": oracle.exact}
    if undecided is not None:
        return OracleVerdict(params, "inconclusive", undecided, cov)
    return OracleVerdict(params, "passed", coverage=cov)


def check_clarke_membership(oracle: MembershipOracle, x0: Sequence, v: Sequence, eps, delta, lam,
                            trials: int = 200, seed: int = 0, levels: int = 6) -> OracleVerdict:
    return check_uts(oracle, x0, [vector(v)], eps, delta, lam, trials, seed, levels)


@dataclass
class EquivalenceReport:
    rows: list
    tensions: list

    @property
    def consistent(self) -> bool:
        return not self.tensions

    def to_json(self) -> dict:
        return {
            "consistent": self.consistent,
            "rows": [
                {
                    "eps": fmt(r["eps"]),
                    "delta": fmt(r["delta"]),
                    "sequential": r["sequential"].status,
                    "uniform": {fmt(l): v.status for l, v in r["uniform"].items()},
                }
                for r in self.rows
            ],
            "tensions": [[fmt(e), fmt(d)] for e, d in self.tensions],
        }


def crosscheck_equivalence(oracle: MembershipOracle, x0: Sequence, d: Sequence[Sequence],
                           grid: Sequence[tuple], trials: int = 100, seed: int = 0) -> EquivalenceReport:
    """Run both testers over a parameter grid and flag (eps, delta) pairs where
    the sequential test passes yet no grid lambda passes the uniform test."""
    groups: dict = {}
    for eps, delta, lam in grid:
        groups.setdefault((Q(eps), Q(delta)), []).append(Q(lam))
    rows, tensions = [], []
    for (eps, delta), lams in groups.items():
        lams = sorted(set(lams), reverse=True)
        seq = check_uts_sequential(oracle, x0, d, eps, delta, trials, seed, lam0=lams[0])
        uni = {l: check_uts(oracle, x0, d, eps, delta, l, trials, seed) for l in lams}
        rows.append({"eps": eps, "delta": delta, "sequential": seq, "uniform": uni})
        if seq.passed and not any(v.passed for v in uni.values()):
            tensions.append((eps, delta))
    return EquivalenceReport(rows, tensions)


# ---------------------------------------------------------------------------
# agreement with the exact Clarke cone


def square_directions(per_side: int = 16) -> list[Vector]:
    """Points on the boundary of [-1, 1]^2, evenly spaced, corners and axes included."""
    out = []
    for i in range(per_side):
        s = Fraction(-1) + Fraction(2 * i, per_side)
        out += [(Fraction(1), s), (-s, Fraction(1)), (Fraction(-1), -s), (s, Fraction(-1))]
    return out


@dataclass
class AgreementReport:
    rows: list  # (direction, exact_member, verdict)

    @property
    def disagreements(self) -> list:
        return [(v, m, r) for v, m, r in self.rows if r.status != "inconclusive" and r.passed != m]

    @property
    def inconclusive_fraction(self) -> float:
        return sum(r.status == "inconclusive" for _, _, r in self.rows) / max(1, len(self.rows))

    @property
    def agree(self) -> bool:
        return not self.disagreements

    def to_json(self) -> dict:
        return {
            "agree": self.agree,
            "directions": len(self.rows),
            "inconclusive_fraction": self.inconclusive_fraction,
            "rows": [
                {"v": [fmt(x) for x in v], "exact_member": m, "oracle": r.status,
                 **({"counterexample": r.counterexample.to_json()} if r.counterexample else {})}
                for v, m, r in self.rows
            ],
        }


def clarke_agreement(u: UnionSet, directions: Sequence[Sequence], eps, delta, lam,
                     trials: int = 500, seed: int = 0) -> AgreementReport:
    from .sets import clarke_tangent_cone

    cone = clarke_tangent_cone(u)
    oracle = MembershipOracle.from_union(u)
    rows = []
    for v in directions:
        v = vector(v)
        verdict = check_clarke_membership(oracle, u.basepoint, v, eps, delta, lam, trials, seed)
        rows.append((v, cone.contains(v), verdict))
    return AgreementReport(rows)
