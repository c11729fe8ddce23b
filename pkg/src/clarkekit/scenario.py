"""Scenario documents: parsing, validation and task execution."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import cones as C
from . import oracle as O
from . import sets as S
from . import subdifferential as D
from . import transversality as T
from .errors import InputError, NotHypertangent, NoWitness, SamplingStarved
from .geometry import MAX_DIM, Q, fmt, vector

VERSIONS = (1,)


class ScenarioError(InputError):
    """Schema problem, with the JSON path (and line when known) of the offending field."""

    def __init__(self, path: str, msg: str, line: int | None = None):
        self.path, self.msg, self.line = path, msg, line
        where = f"line {line}, " if line else ""
        super().__init__(f"{where}{path}: {msg}")


@dataclass
class Scenario:
    version: int
    sets: dict
    functions: dict
    cones: dict
    tasks: list
    name: str = ""
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)


def load_text(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario must be a JSON object")
    return doc


def parse(doc: dict, max_dim: int = MAX_DIM, text: str | None = None) -> Scenario:
    def line_of(key: str) -> int | None:
        if text is None:
            return None
        idx = text.find(f'"{key}"')
        return text.count("\n", 0, idx) + 1 if idx >= 0 else None

    version = doc.get("version")
    if version not in VERSIONS:
        raise ScenarioError("version", f"unsupported version {version!r}; supported: {list(VERSIONS)}", line_of("version"))
    if not 1 <= max_dim <= MAX_DIM:
        raise ScenarioError("--max-dim", f"must lie in 1..{MAX_DIM}")
    sets, functions, cones = {}, {}, {}
    for name, d in (doc.get("sets") or {}).items():
        try:
            sets[name] = S.UnionSet.from_json(d)
        except InputError as exc:
            raise ScenarioError(f"sets.{name}", str(exc), line_of(name)) from exc
        if sets[name].dim > max_dim:
            raise ScenarioError(f"sets.{name}", f"dimension {sets[name].dim} exceeds --max-dim {max_dim}", line_of(name))
    for name, d in (doc.get("functions") or {}).items():
        try:
            functions[name] = D.PWAFunction.from_json(d)
        except InputError as exc:
            raise ScenarioError(f"functions.{name}", str(exc), line_of(name)) from exc
        if functions[name].dim + 2 > max_dim:
            raise ScenarioError(f"functions.{name}", f"lifted dimension exceeds --max-dim {max_dim}", line_of(name))
    for name, d in (doc.get("cones") or {}).items():
        try:
            if isinstance(d, dict) and "kind" in d:
                cones[name] = C.ZooCone.from_json(d)
            else:
                cones[name] = C.ZooCone.polyhedral(C.PolyhedralCone.from_json(d))
        except (InputError, KeyError, TypeError) as exc:
            raise ScenarioError(f"cones.{name}", str(exc), line_of(name)) from exc
        if cones[name].dim > max_dim:
            raise ScenarioError(f"cones.{name}", f"dimension exceeds --max-dim {max_dim}", line_of(name))
    tasks = doc.get("tasks")
    if not isinstance(tasks, list):
        raise ScenarioError("tasks", "must be a list", line_of("tasks"))
    sc = Scenario(version, sets, functions, cones, tasks, doc.get("name", ""), int(doc.get("seed", 0)), doc)
    for i, t in enumerate(tasks):
        _check_task(sc, i, t)
    return sc


# ---------------------------------------------------------------------------
# task table: op -> (required refs by kind, runner)


def _ref(sc: Scenario, kind: str, name: Any, path: str):
    table = {"set": sc.sets, "function": sc.functions, "cone": sc.cones}[kind]
    if not isinstance(name, str) or name not in table:
        raise ScenarioError(path, f"unknown {kind} {name!r}")
    return table[name]


def _cone_arg(sc: Scenario, name: Any, path: str) -> C.PolyhedralCone:
    """A polyhedral cone by name, or the Clarke tangent cone of a named set."""
    if isinstance(name, str) and name in sc.sets:
        return S.clarke_tangent_cone(sc.sets[name])
    z = _ref(sc, "cone", name, path)
    return z.as_polyhedral()


OPS: dict[str, dict] = {}


def op(name: str, refs: dict, informational: bool = False):
    def deco(fn: Callable):
        OPS[name] = {"refs": refs, "run": fn, "info": informational}
        return fn

    return deco


def _check_task(sc: Scenario, i: int, t: Any) -> None:
    path = f"tasks[{i}]"
    if not isinstance(t, dict):
        raise ScenarioError(path, "task must be an object")
    name = t.get("op")
    if name not in OPS:
        raise ScenarioError(f"{path}.op", f"unknown operation {name!r}")
    args = t.get("args", {})
    if not isinstance(args, dict):
        raise ScenarioError(f"{path}.args", "must be an object")
    for key, kind in OPS[name]["refs"].items():
        if key not in args:
            raise ScenarioError(f"{path}.args", f"missing {key!r}")
        if kind == "cone_or_set":
            if not (args[key] in sc.sets or args[key] in sc.cones):
                raise ScenarioError(f"{path}.args.{key}", f"unknown cone or set {args[key]!r}")
        elif kind == "set_or_function":
            if not (args[key] in sc.sets or args[key] in sc.functions):
                raise ScenarioError(f"{path}.args.{key}", f"unknown set or function {args[key]!r}")
        elif kind in ("set", "function", "cone"):
            _ref(sc, kind, args[key], f"{path}.args.{key}")
        elif kind == "vector":
            try:
                vector(args[key])
            except (InputError, TypeError) as exc:
                raise ScenarioError(f"{path}.args.{key}", str(exc)) from exc
        elif kind == "points":
            pts = args[key]
            if not isinstance(pts, list):
                raise ScenarioError(f"{path}.args.{key}", "must be a list of vectors")
            for j, p in enumerate(pts):
                try:
                    vector(p)
                except (InputError, TypeError) as exc:
                    raise ScenarioError(f"{path}.args.{key}[{j}]", str(exc)) from exc
        elif kind == "rational":
            try:
                Q(args[key])
            except InputError as exc:
                raise ScenarioError(f"{path}.args.{key}", str(exc)) from exc


def _q(args, key, default):
    return Q(args.get(key, default))


@op("clarke_tangent_cone", {"set": "set"}, informational=True)
def _(sc, a, seed):
    c = S.clarke_tangent_cone(sc.sets[a["set"]])
    return "computed", c.to_json(), True, {"cone": c}


@op("clarke_normal_cone", {"set": "set"}, informational=True)
def _(sc, a, seed):
    c = S.clarke_normal_cone(sc.sets[a["set"]])
    return "computed", c.to_json(), True, {"cone": c}


@op("bouligand_cone_at", {"set": "set", "point": "vector"}, informational=True)
def _(sc, a, seed):
    cs = S.bouligand_cone_at(sc.sets[a["set"]], vector(a["point"]))
    return "computed", [c.to_json() for c in cs], True, {}


@op("verify_tangential_intersection", {"a": "set", "b": "set"})
def _(sc, a, seed):
    r = S.verify_tangential_intersection(sc.sets[a["a"]], sc.sets[a["b"]])
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


@op("verify_normal_intersection", {"a": "set", "b": "set"})
def _(sc, a, seed):
    r = S.verify_normal_intersection(sc.sets[a["a"]], sc.sets[a["b"]])
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


@op("transversality_radius", {"c1": "cone_or_set", "c2": "cone_or_set"}, informational=True)
def _(sc, a, seed):
    r = C.transversality_radius(_cone_arg(sc, a["c1"], "c1"), _cone_arg(sc, a["c2"], "c2"))
    return ("transversal" if isinstance(r, C.Radius) else "not_transversal"), r.to_json(), True, {}


@op("jameson_radius", {"c1": "cone_or_set", "c2": "cone_or_set"}, informational=True)
def _(sc, a, seed):
    r = C.jameson_radius(_cone_arg(sc, a["c1"], "c1"), _cone_arg(sc, a["c2"], "c2"))
    return ("transversal" if isinstance(r, C.Radius) else "not_transversal"), r.to_json(), True, {}


@op("verify_polar_sandwich", {"a": "points", "b": "points"})
def _(sc, a, seed):
    r = C.verify_polar_sandwich([vector(p) for p in a["a"]], [vector(p) for p in a["b"]])
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


@op("sum_closedness_probe", {"z1": "cone", "z2": "cone", "w": "vector"}, informational=True)
def _(sc, a, seed):
    r = C.sum_closedness_probe(sc.cones[a["z1"]], sc.cones[a["z2"]], vector(a["w"]), int(a.get("k_max", 10)))
    verdict = {C.Closed: "closed", C.InSum: "attained", C.NotClosedEvidence: "not_closed"}[type(r)]
    return verdict, r.to_json(), True, {}


def _uts_pair(sc, a, seed):
    kw = {"trials": int(a.get("trials", 32)), "seed": seed}
    da = T.uts_from_clarke(sc.sets[a["a"]], **kw)
    db = T.uts_from_clarke(sc.sets[a["b"]], **kw)
    return da, db


@op("strong_transversality", {"a": "set", "b": "set"})
def _(sc, a, seed):
    r = T.strong_transversality(*_uts_pair(sc, a, seed))
    return ("certified" if isinstance(r, T.TransversalityCertificate) else "not_certified"), r.to_json(), True, {}


@op("witness_search", {"a": "set", "b": "set", "x_a": "vector", "x_b": "vector", "epsilon": "rational"})
def _(sc, a, seed):
    cert = T.strong_transversality(*_uts_pair(sc, a, seed))
    if not isinstance(cert, T.TransversalityCertificate):
        return "not_certified", cert.to_json(), True, {}
    try:
        rec = T.witness_search(cert, vector(a["x_a"]), vector(a["x_b"]), Q(a["epsilon"]))
    except NoWitness as exc:
        return "no_witness", {"error": str(exc)}, True, {}
    out = rec.to_json()
    out["verified"] = rec.holds(cert.d_a.host, cert.d_b.host)
    return ("found" if out["verified"] else "no_witness"), out, True, {}


def _oracle_args(a, seed):
    return (_q(a, "eps", "1/8"), _q(a, "delta", "1/4"), _q(a, "lambda", "1/4"), int(a.get("trials", 200)),
            int(a.get("seed", seed)))


def _oracle_for(sc, a):
    """A named set, or the sublevel set {f <= level} of a named function (needs x0)."""
    name = a["set"]
    if name in sc.sets:
        u = sc.sets[name]
        return O.MembershipOracle.from_union(u), u.basepoint
    if "x0" not in a:
        raise InputError("a sublevel oracle needs 'x0'")
    f = sc.functions[name]
    return O.MembershipOracle.from_pwa_sublevel(f, _q(a, "level", 0)), vector(a["x0"])


@op("check_clarke_membership", {"set": "set_or_function", "v": "vector"})
def _(sc, a, seed):
    oracle, x0 = _oracle_for(sc, a)
    eps, delta, lam, trials, s = _oracle_args(a, seed)
    r = O.check_clarke_membership(oracle, x0, vector(a["v"]), eps, delta, lam, trials, s)
    return r.status, r.to_json(), r.coverage.get("exact", False), {}


@op("check_uts", {"set": "set_or_function", "d": "points"})
def _(sc, a, seed):
    oracle, x0 = _oracle_for(sc, a)
    eps, delta, lam, trials, s = _oracle_args(a, seed)
    r = O.check_uts(oracle, x0, [vector(p) for p in a["d"]], eps, delta, lam, trials, s)
    return r.status, r.to_json(), r.coverage.get("exact", False), {}


@op("check_uts_sequential", {"set": "set_or_function", "d": "points"})
def _(sc, a, seed):
    oracle, x0 = _oracle_for(sc, a)
    eps, delta, lam, trials, s = _oracle_args(a, seed)
    r = O.check_uts_sequential(oracle, x0, [vector(p) for p in a["d"]], eps, delta, trials, s, lam0=lam)
    return r.status, r.to_json(), r.coverage.get("exact", False), {}


@op("crosscheck_equivalence", {"set": "set", "d": "points", "grid": "grid"})
def _(sc, a, seed):
    u = sc.sets[a["set"]]
    grid = [tuple(Q(x) for x in row) for row in a["grid"]]
    r = O.crosscheck_equivalence(O.MembershipOracle.from_union(u), u.basepoint, [vector(p) for p in a["d"]],
                                 grid, int(a.get("trials", 100)), int(a.get("seed", seed)))
    return ("consistent" if r.consistent else "tension"), r.to_json(), True, {}


@op("clarke_oracle_agreement", {"set": "set"})
def _(sc, a, seed):
    u = sc.sets[a["set"]]
    if u.dim != 2:
        raise InputError("clarke_oracle_agreement uses the planar direction grid")
    eps, delta, lam, trials, s = _oracle_args(a, seed)
    dirs = O.square_directions(int(a.get("per_side", 16)))
    r = O.clarke_agreement(u, dirs, eps, delta, lam, trials, s)
    verdict = "agree" if r.agree else "disagree"
    if r.agree and r.inconclusive_fraction > 0.05:
        verdict = "inconclusive"
    return verdict, r.to_json(), True, {}


@op("hypertangent_epsilon", {"set": "set", "v": "vector"}, informational=True)
def _(sc, a, seed):
    try:
        e = T.hypertangent_epsilon(sc.sets[a["set"]], vector(a["v"]), int(a.get("grid", 16)))
    except NotHypertangent as exc:
        return "not_hypertangent", {"reason": str(exc)}, True, {}
    return "hypertangent", {"epsilon": fmt(e)}, True, {}


@op("clarke_subdifferential", {"f": "function", "x0": "vector"}, informational=True)
def _(sc, a, seed):
    r = D.clarke_subdifferential(sc.functions[a["f"]], vector(a["x0"]))
    return "computed", r.to_json(), True, {"vertices": r.polytope}


@op("singular_qualification", {"f1": "function", "f2": "function", "x0": "vector"})
def _(sc, a, seed):
    r = D.singular_qualification(sc.functions[a["f1"]], sc.functions[a["f2"]], vector(a["x0"]))
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


@op("epigraph_lift", {"f1": "function", "f2": "function", "x0": "vector"}, informational=True)
def _(sc, a, seed):
    r = D.epigraph_lift(sc.functions[a["f1"]], sc.functions[a["f2"]], vector(a["x0"]))
    return "computed", r.to_json(), True, {}


@op("sum_rule_check", {"f1": "function", "f2": "function", "x0": "vector"})
def _(sc, a, seed):
    r = D.sum_rule_check(sc.functions[a["f1"]], sc.functions[a["f2"]], vector(a["x0"]))
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


@op("intermediate_inclusion_check", {"f1": "function", "f2": "function", "x0": "vector"})
def _(sc, a, seed):
    r = D.intermediate_inclusion_check(sc.functions[a["f1"]], sc.functions[a["f2"]], vector(a["x0"]))
    return ("holds" if r.holds else "fails"), r.to_json(), True, {}


PASS = {"holds", "passed", "certified", "found", "agree", "consistent"}
FAIL = {"fails", "failed", "not_certified", "no_witness", "disagree", "tension"}


def _matches(expect: Any, verdict: str, extra: dict) -> bool:
    if isinstance(expect, str):
        return expect == verdict
    if isinstance(expect, dict) and "cone" in expect and "cone" in extra:
        got = extra["cone"]
        want = C.PolyhedralCone.from_json(expect["cone"], got.dim)
        return got.equals(want)
    if isinstance(expect, dict) and "vertices" in expect and "vertices" in extra:
        want = sorted(vector(v) for v in expect["vertices"])
        return sorted(extra["vertices"]) == want
    return False


def run_task(sc: Scenario, index: int, seed: int | None = None) -> dict:
    t = sc.tasks[index]
    entry = OPS[t["op"]]
    args = t.get("args", {})
    seed = sc.seed if seed is None else seed
    start = time.perf_counter()
    try:
        verdict, result, exact, extra = entry["run"](sc, args, seed)
    except SamplingStarved as exc:
        verdict, result, exact, extra = "inconclusive", {"error": str(exc)}, False, {}
    except InputError as exc:
        verdict, result, exact, extra = "input_error", {"error": str(exc)}, True, {}
    elapsed = time.perf_counter() - start
    if "expect" in t:
        status = "pass" if _matches(t["expect"], verdict, extra) else "fail"
    elif entry["info"]:
        status = "info"
    elif verdict in PASS:
        status = "pass"
    elif verdict in FAIL:
        status = "fail"
    else:
        status = "inconclusive"
    if verdict == "inconclusive":
        status = "inconclusive"
    if verdict == "input_error":
        status = "input_error"
    return {
        "index": index,
        "op": t["op"],
        "args": args,
        **({"expect": t["expect"]} if "expect" in t else {}),
        "verdict": verdict,
        "status": status,
        "provenance": "exact" if exact else "sampled",
        "result": result,
        "elapsed_s": round(elapsed, 4),
    }


def _run_in_worker(payload):
    doc, index, seed, max_dim = payload
    return run_task(parse(doc, max_dim), index, seed)


def run_scenario(sc: Scenario, seed: int | None = None, parallel: bool = False, max_dim: int = MAX_DIM) -> dict:
    if parallel and len(sc.tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as ex:
            rows = list(ex.map(_run_in_worker, [(sc.raw, i, seed, max_dim) for i in range(len(sc.tasks))]))
    else:
        rows = [run_task(sc, i, seed) for i in range(len(sc.tasks))]
    counts = {k: sum(r["status"] == k for r in rows) for k in ("pass", "fail", "inconclusive", "info", "input_error")}
    if counts["input_error"]:
        code = 2
    elif counts["fail"]:
        code = 1
    elif counts["inconclusive"]:
        code = 3
    else:
        code = 0
    return {"scenario": sc.name, "version": sc.version, "seed": sc.seed if seed is None else seed,
            "tasks": rows, "summary": counts, "exit_code": code}


def render_text(report: dict) -> str:
    lines = [f"scenario {report['scenario'] or '<unnamed>'} (seed {report['seed']})"]
    for r in report["tasks"]:
        args = ", ".join(f"{k}={_short(v)}" for k, v in r["args"].items())
        lines.append(f"  [{r['status'].upper():>12}] #{r['index']} {r['op']}({args}) -> {r['verdict']}"
                     f" [{r['provenance']}] {r['elapsed_s']:.3f}s")
    s = report["summary"]
    lines.append(f"summary: {s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive, "
                 f"{s['info']} info, {s['input_error']} input errors; exit {report['exit_code']}")
    return "\n".join(lines)


def _short(v) -> str:
    if isinstance(v, list):
        return "(" + ",".join(_short(x) for x in v) + ")"
    return str(v)
