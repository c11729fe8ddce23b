import json
import subprocess
import sys

import pytest

from clarkekit.cli import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_PASS, main
from clarkekit.gallery import GALLERIES, gallery
from clarkekit.scenario import OPS, ScenarioError, load_text, parse, run_scenario


def strip_timing(report):
    report = json.loads(json.dumps(report))
    for t in report["tasks"]:
        t.pop("elapsed_s")
    return report


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return str(p)


HALFPLANES = {
    "version": 1,
    "sets": {
        "A": {"basepoint": ["0", "0"], "pieces": [{"h_rep": [["0", "-1"]]}]},
        "B": {"basepoint": ["0", "0"], "pieces": [{"h_rep": [["-1", "1"]]}]},
    },
    "tasks": [
        {"op": "transversality_radius", "args": {"c1": "A", "c2": "B"}, "expect": "transversal"},
        {"op": "clarke_tangent_cone", "args": {"set": "A"}},
    ],
}


class TestGalleries:
    @pytest.mark.parametrize("name", GALLERIES)
    def test_each_gallery_passes(self, name):
        sc = parse(gallery(name))
        report = run_scenario(sc)
        assert report["exit_code"] == 0, [t for t in report["tasks"] if t["status"] != "pass"]

    @pytest.mark.parametrize("name", GALLERIES)
    def test_round_trip_is_deterministic(self, name):
        text = json.dumps(gallery(name))
        a = run_scenario(parse(load_text(text), text=text), seed=3)
        b = run_scenario(parse(json.loads(json.dumps(gallery(name)))), seed=3)
        assert strip_timing(a) == strip_timing(b)

    def test_every_gallery_op_is_registered(self):
        for name in GALLERIES:
            for t in gallery(name)["tasks"]:
                assert t["op"] in OPS

    def test_unknown_gallery(self, capsys):
        assert main(["gallery", "nope"]) == EXIT_INPUT
        assert "available" in capsys.readouterr().err


class TestCommands:
    def test_list(self, capsys):
        assert main(["list-galleries"]) == EXIT_PASS
        assert capsys.readouterr().out.split() == list(GALLERIES)

    def test_gallery_emits_json(self, capsys):
        assert main(["gallery", "abs-sum-rule"]) == EXIT_PASS
        doc = json.loads(capsys.readouterr().out)
        assert doc["version"] == 1 and doc["tasks"]

    def test_gallery_run(self, capsys):
        assert main(["gallery", "transversal-halfplanes", "--run", "--json-only"]) == EXIT_PASS
        report = json.loads(capsys.readouterr().out)
        assert report["summary"]["fail"] == 0

    def test_run_file(self, tmp_path, capsys):
        assert main(["run", write(tmp_path, HALFPLANES)]) == EXIT_PASS
        out = capsys.readouterr().out
        assert "summary:" in out
        report = json.loads(out.strip().splitlines()[-1])
        assert [t["status"] for t in report["tasks"]] == ["pass", "info"]
        assert report["tasks"][0]["result"]["rho_squared"] == "1/4"

    def test_validate(self, tmp_path, capsys):
        assert main(["validate", write(tmp_path, HALFPLANES)]) == EXIT_PASS
        assert "2 tasks" in capsys.readouterr().out

    def test_failing_expectation(self, tmp_path):
        doc = json.loads(json.dumps(HALFPLANES))
        doc["tasks"][0]["expect"] = "not_transversal"
        assert main(["run", write(tmp_path, doc), "--json-only"]) == EXIT_FAIL

    def test_inconclusive_exit(self, tmp_path):
        doc = {
            "version": 1,
            "functions": {"z": {"type": "max", "pieces": [{"gradient": ["1"], "offset": "0"},
                                                         {"gradient": ["-1"], "offset": "0"}]}},
            "tasks": [{"op": "check_uts", "args": {"set": "z", "x0": ["0"], "d": [["1"]],
                                                   "eps": "1/16", "delta": "1/8", "lambda": "1/16",
                                                   "trials": 5}}],
        }
        # {|x| <= 0} = {0}: a sampled miss is never promoted to a refutation
        assert main(["run", write(tmp_path, doc), "--json-only"]) == EXIT_INCONCLUSIVE

    def test_sublevel_oracle_needs_basepoint(self, tmp_path):
        doc = {
            "version": 1,
            "functions": {"z": {"type": "max", "pieces": [{"gradient": ["1"], "offset": "0"}]}},
            "tasks": [{"op": "check_uts", "args": {"set": "z", "d": [["1"]]}}],
        }
        assert main(["run", write(tmp_path, doc), "--json-only"]) == EXIT_INPUT

    def test_stdin(self, monkeypatch, capsys):
        import io

        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(HALFPLANES)))
        assert main(["run", "-", "--json-only"]) == EXIT_PASS

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "clarkekit", "list-galleries"],
                             capture_output=True, text=True, check=True)
        assert "abs-sum-rule" in out.stdout


class TestInputErrors:
    def test_unresolved_name(self, tmp_path, capsys):
        doc = json.loads(json.dumps(HALFPLANES))
        doc["tasks"][0]["args"]["c2"] = "C"
        assert main(["run", write(tmp_path, doc)]) == EXIT_INPUT
        assert "unknown" in capsys.readouterr().err

    def test_bad_json_reports_line(self, tmp_path, capsys):
        assert main(["run", write(tmp_path, '{\n"version": 1,\n"tasks": [\n')]) == EXIT_INPUT
        assert "line" in capsys.readouterr().err

    def test_bad_version(self):
        with pytest.raises(ScenarioError) as exc:
            parse({"version": 9, "tasks": []})
        assert exc.value.path == "version"

    def test_unknown_op(self):
        with pytest.raises(ScenarioError):
            parse({"version": 1, "tasks": [{"op": "frobnicate", "args": {}}]})

    def test_dimension_cap(self, tmp_path):
        doc = json.loads(json.dumps(HALFPLANES))
        assert main(["run", write(tmp_path, doc), "--max-dim", "1"]) == EXIT_INPUT
        assert main(["run", write(tmp_path, doc), "--max-dim", "7"]) == EXIT_INPUT

    def test_bad_rational(self, tmp_path):
        doc = json.loads(json.dumps(HALFPLANES))
        doc["sets"]["A"]["pieces"][0]["h_rep"] = [[0.5, "-1"]]
        assert main(["run", write(tmp_path, doc)]) == EXIT_INPUT

    def test_missing_file(self):
        assert main(["run", "/nonexistent/scenario.json"]) == EXIT_INPUT

    def test_origin_missing_is_input_error(self, tmp_path):
        doc = {"version": 1, "tasks": [{"op": "verify_polar_sandwich",
                                        "args": {"a": [["1", "1"], ["2", "1"]], "b": [["0", "0"]]}}]}
        assert main(["run", write(tmp_path, doc), "--json-only"]) == EXIT_INPUT


def test_parallel_matches_serial():
    sc = parse(gallery("abs-sum-rule"))
    assert strip_timing(run_scenario(sc, 1, parallel=True)) == strip_timing(run_scenario(sc, 1))
