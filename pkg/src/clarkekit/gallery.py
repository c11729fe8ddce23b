"""Built-in sets and scenarios."""
from __future__ import annotations

import copy

from .errors import InputError
from .sets import UnionSet

# each piece is a list of normals a with <a, x> <= 0
_SETS = {
    "upper-halfplane": [[(0, -1)]],
    "below-diagonal": [[(-1, 1)]],
    "wedge": [[(0, -1), (-1, -1)]],
    "quadrant-union": [[(-1, 0), (0, -1)], [(1, 0), (0, 1)]],
    "halfplane-union": [[(0, -1)], [(-1, 1)]],
    "neg-abs-epigraph": [[(1, -1)], [(-1, -1)]],
}

GALLERY_SETS = tuple(_SETS)


def gallery_set(name: str) -> UnionSet:
    if name not in _SETS:
        raise InputError(f"unknown gallery set {name!r}; available: {', '.join(GALLERY_SETS)}")
    return UnionSet.from_halfspaces(_SETS[name], (0, 0))


def _set_json(name: str) -> dict:
    return {"basepoint": ["0", "0"], "pieces": [{"h_rep": [[str(x) for x in a] for a in p]} for p in _SETS[name]]}


def _fn(kind, pieces, domain=None):
    d = {"type": kind, "pieces": [{"gradient": [str(g) for g in grad], "offset": str(c)} for grad, c in pieces]}
    if domain:
        d["domain"] = [{"normal": [str(x) for x in a], "offset": str(b)} for a, b in domain]
    return d


_ABS = _fn("max", [((1,), 0), ((-1,), 0)])
_NEG_ABS = _fn("negmax", [((1,), 0), ((-1,), 0)])
_ZERO = _fn("max", [((0,), 0)])

_SCENARIOS = {
    "quadrant-union-clarke-collapse": {
        "version": 1,
        "description": "Union of the closed first and third quadrants: the Clarke cone collapses to {0}.",
        "sets": {"Q": _set_json("quadrant-union")},
        "tasks": [
            {"op": "clarke_tangent_cone", "args": {"set": "Q"}, "expect": {"cone": {"v_rep": []}}},
            {"op": "clarke_normal_cone", "args": {"set": "Q"},
             "expect": {"cone": {"v_rep": [["1", "0"], ["-1", "0"], ["0", "1"], ["0", "-1"]]}}},
            {"op": "check_clarke_membership",
             "args": {"set": "Q", "v": ["1", "0"], "eps": "1/16", "delta": "1/8", "lambda": "1/16", "trials": 200},
             "expect": "failed"},
            {"op": "clarke_oracle_agreement",
             "args": {"set": "Q", "per_side": 4, "eps": "1/16", "delta": "1/8", "lambda": "1/16", "trials": 100},
             "expect": "agree"},
            {"op": "hypertangent_epsilon", "args": {"set": "Q", "v": ["1", "0"]}, "expect": "not_hypertangent"},
        ],
    },
    "transversal-halfplanes": {
        "version": 1,
        "description": "A = {y >= 0} and B = {y <= x} meet transversally at the origin.",
        "sets": {"A": _set_json("upper-halfplane"), "B": _set_json("below-diagonal")},
        "tasks": [
            {"op": "transversality_radius", "args": {"c1": "A", "c2": "B"}, "expect": "transversal"},
            {"op": "strong_transversality", "args": {"a": "A", "b": "B"}, "expect": "certified"},
            {"op": "witness_search",
             "args": {"a": "A", "b": "B", "x_a": ["0", "1/10"], "x_b": ["1/10", "0"], "epsilon": "1/10"},
             "expect": "found"},
            {"op": "verify_tangential_intersection", "args": {"a": "A", "b": "B"}, "expect": "holds"},
            {"op": "verify_normal_intersection", "args": {"a": "A", "b": "B"}, "expect": "holds"},
        ],
    },
    "nontransversal-complements": {
        "version": 1,
        "description": "A = {y >= 0} and B = {y <= 0}: the transversality hypotheses fail.",
        "sets": {"A": _set_json("upper-halfplane"),
                 "B": {"basepoint": ["0", "0"], "pieces": [{"h_rep": [["0", "1"]]}]}},
        "tasks": [
            {"op": "transversality_radius", "args": {"c1": "A", "c2": "B"}, "expect": "not_transversal"},
            {"op": "strong_transversality", "args": {"a": "A", "b": "B"}, "expect": "not_certified"},
            {"op": "verify_tangential_intersection", "args": {"a": "A", "b": "B"}, "expect": "holds"},
            {"op": "verify_normal_intersection", "args": {"a": "A", "b": "B"}},
        ],
    },
    "soc-nonclosed-sum": {
        "version": 1,
        "description": "Second-order cone in R^3 against a plane whose polar is a boundary line.",
        "cones": {
            "K": {"kind": "second_order", "dim": 3},
            "L": {"kind": "subspace", "basis": [["0", "1", "0"], ["1", "0", "-1"]]},
            "R": {"kind": "ray", "direction": ["1", "0", "0"]},
        },
        "tasks": [
            {"op": "sum_closedness_probe", "args": {"z1": "K", "z2": "L", "w": ["0", "1", "0"], "k_max": 10},
             "expect": "not_closed"},
            {"op": "sum_closedness_probe", "args": {"z1": "R", "z2": "R", "w": ["0", "1", "0"], "k_max": 10},
             "expect": "closed"},
        ],
    },
    "abs-sum-rule": {
        "version": 1,
        "description": "f1 = |x| and f2 = -|x| at 0, plus the doubled case |x| + |x|.",
        "functions": {"f1": _ABS, "f2": _NEG_ABS},
        "tasks": [
            {"op": "clarke_subdifferential", "args": {"f": "f1", "x0": ["0"]}, "expect": {"vertices": [["-1"], ["1"]]}},
            {"op": "clarke_subdifferential", "args": {"f": "f2", "x0": ["0"]}, "expect": {"vertices": [["-1"], ["1"]]}},
            {"op": "sum_rule_check", "args": {"f1": "f1", "f2": "f2", "x0": ["0"]}, "expect": "holds"},
            {"op": "sum_rule_check", "args": {"f1": "f1", "f2": "f1", "x0": ["0"]}, "expect": "holds"},
            {"op": "intermediate_inclusion_check", "args": {"f1": "f1", "f2": "f2", "x0": ["0"]}, "expect": "holds"},
        ],
    },
    "indicator-qualification-failure": {
        "version": 1,
        "description": "Indicators of opposing half-lines violate the singular qualification; real-valued pairs satisfy it.",
        "functions": {
            "i_pos": _fn("max", [((0,), 0)], domain=[((-1,), 0)]),
            "i_neg": _fn("max", [((0,), 0)], domain=[((1,), 0)]),
            "abs": _ABS,
            "negabs": _NEG_ABS,
            "zero": _ZERO,
        },
        "tasks": [
            {"op": "singular_qualification", "args": {"f1": "i_pos", "f2": "i_neg", "x0": ["0"]}, "expect": "fails"},
            {"op": "singular_qualification", "args": {"f1": "abs", "f2": "negabs", "x0": ["0"]}, "expect": "holds"},
            {"op": "singular_qualification", "args": {"f1": "abs", "f2": "zero", "x0": ["0"]}, "expect": "holds"},
            {"op": "singular_qualification", "args": {"f1": "i_pos", "f2": "abs", "x0": ["0"]}, "expect": "holds"},
        ],
    },
}

GALLERIES = tuple(_SCENARIOS)


def gallery(name: str) -> dict:
    if name not in _SCENARIOS:
        raise InputError(f"unknown gallery {name!r}; available: {', '.join(GALLERIES)}")
    d = copy.deepcopy(_SCENARIOS[name])
    d["name"] = name
    return d
