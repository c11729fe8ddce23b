"""Command-line entry point: ``python3 -m clarkekit``."""
from __future__ import annotations

import argparse
import json
import sys

from .errors import InputError
from .gallery import GALLERIES, gallery
from .geometry import MAX_DIM
from .scenario import load_text, parse, render_text, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clarkekit", description="Exact Clarke-cone and transversality certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="seed for sampled checks")
        sp.add_argument("--parallel", action="store_true", help="run tasks in worker processes")
        sp.add_argument("--json-only", action="store_true", help="print only the JSON report")
        sp.add_argument("--max-dim", type=int, default=MAX_DIM, help=f"dimension cap (at most {MAX_DIM})")

    r = sub.add_parser("run", help="run a scenario file ('-' for stdin)")
    r.add_argument("scenario")
    common(r)
    g = sub.add_parser("gallery", help="emit a built-in scenario, or run it with --run")
    g.add_argument("name")
    g.add_argument("--run", action="store_true")
    common(g)
    sub.add_parser("list-galleries", help="list built-in scenarios")
    v = sub.add_parser("validate", help="schema check only")
    v.add_argument("scenario")
    v.add_argument("--max-dim", type=int, default=MAX_DIM)
    return p


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(report: dict, json_only: bool) -> None:
    if not json_only:
        print(render_text(report))
    print(json.dumps(report, indent=None if not json_only else 2, sort_keys=False))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-galleries":
            print("\n".join(GALLERIES))
            return EXIT_PASS
        if args.command == "gallery":
            doc = gallery(args.name)
            if not args.run:
                print(json.dumps(doc, indent=2))
                return EXIT_PASS
            sc = parse(doc, args.max_dim)
        else:
            text = _read(args.scenario)
            doc = load_text(text)
            sc = parse(doc, args.max_dim, text)
            if not sc.name:
                sc.name = args.scenario
            if args.command == "validate":
                print(f"ok: {len(sc.tasks)} tasks")
                return EXIT_PASS
        report = run_scenario(sc, args.seed, args.parallel, args.max_dim)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, args.json_only)
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
