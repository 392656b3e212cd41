import json
import subprocess
import sys

import pytest

from flexrepair.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

from conftest import CORPUS, SAMPLES

MINSUM = CORPUS / "problems" / "minsum"


def test_parse_and_model(capsys):
    assert main(["parse", str(SAMPLES / "sample.ml")]) == EXIT_OK
    assert main(["model", str(SAMPLES / "sample.ml")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Loc 2" in out and "$cond := Lt(ind#0, len(iter#0))" in out


def test_model_syntax_error(tmp_path, capsys):
    bad = tmp_path / "bad.ml"
    bad.write_text("x = (\n")
    assert main(["model", str(bad)]) == EXIT_FAIL
    assert "error" in capsys.readouterr().err


def test_missing_file_is_usage_error():
    assert main(["model", "/nonexistent/x.ml"]) == EXIT_USAGE


def test_unknown_flag_is_usage_error():
    assert main(["model", "--frobnicate"]) == EXIT_USAGE


def test_align_extra_if(capsys):
    code = main(["align", str(SAMPLES / "extra_if_correct.ml"), str(SAMPLES / "extra_if_incorrect.ml")])
    report = json.loads(capsys.readouterr().out)
    assert code == EXIT_OK and report["gate"] == "Proceed"
    code = main(["align", str(SAMPLES / "extra_if_correct.ml"), str(SAMPLES / "extra_if_incorrect.ml"),
                 "--aligner", "rigid"])
    assert code == EXIT_FAIL
    assert json.loads(capsys.readouterr().out)["functions"]["f"] == "Mismatch"


def test_align_pdg(capsys):
    assert main(["align", str(SAMPLES / "extra_if_correct.ml"), str(SAMPLES / "extra_if_incorrect.ml"),
                 "--aligner", "pdg", "--k", "1.5"]) == EXIT_OK
    kinds = sorted(s["kind"] for s in json.loads(capsys.readouterr().out)["suggestions"])
    assert kinds == ["remove", "remove", "replace"]


def test_repair_and_verify(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["repair", str(MINSUM / "correct" / "ref.ml"), str(MINSUM / "incorrect" / "flipped.ml"),
                 str(MINSUM / "tests"), "--json", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["status"] == "FullyRepaired" and report["numRepairs"] >= 1
    capsys.readouterr()
    assert main(["verify", str(MINSUM / "correct" / "ref.ml"), "--tests", str(MINSUM / "tests")]) == EXIT_OK
    assert main(["verify", str(MINSUM / "incorrect" / "flipped.ml"), str(MINSUM / "tests")]) == EXIT_FAIL


def test_repair_without_tests_is_usage_error():
    assert main(["repair", str(SAMPLES / "extra_if_correct.ml"),
                 str(SAMPLES / "extra_if_incorrect.ml")]) == EXIT_USAGE


def test_batch_empty_technique_list():
    assert main(["batch", str(CORPUS), "--techniques", ""]) == EXIT_USAGE
    assert main(["batch", str(CORPUS), "--techniques", "nope"]) == EXIT_USAGE


def test_batch_single_problem(tmp_path, capsys):
    out = tmp_path / "pairs.jsonl"
    code = main(["batch", str(CORPUS / "problems"), "--techniques", "flex-label-edge", "--json", str(out)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["techniques"]["flex-label-edge"]["unsound"] == 0
    assert len(out.read_text().splitlines()) == 20


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "flexrepair", "model", str(SAMPLES / "sample.ml")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("Loc 1")
