"""Run every built-in scenario and print one summary line per gallery."""
import sys

from clarkekit.gallery import GALLERIES, gallery
from clarkekit.scenario import parse, run_scenario


def main() -> int:
    worst = 0
    for name in GALLERIES:
        report = run_scenario(parse(gallery(name)))
        s = report["summary"]
        print(f"{name:36s} exit {report['exit_code']}  pass {s['pass']}  fail {s['fail']}  "
              f"inconclusive {s['inconclusive']}  info {s['info']}")
        worst = max(worst, report["exit_code"])
    return worst


if __name__ == "__main__":
    sys.exit(main())
