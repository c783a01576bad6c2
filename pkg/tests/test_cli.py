import json

import pytest

from orbiforms import harness
from orbiforms.cli import main
from orbiforms.suites import SUITES, catalogue

from conftest import ZOO

INTERVAL = ZOO / "interval.json"
MIRROR = ZOO / "mirror.json"


@pytest.fixture
def failing(tmp_path):
    """The mirror integral with a wrong expected value that is claimed to hold."""
    doc = json.loads(MIRROR.read_text())
    doc["name"] = "wrong_value"
    doc["suites"] = [{"suite": "integral", "groupoid": "Y", "form": "x2", "expected": "2/3"}]
    path = tmp_path / "wrong_value.json"
    path.write_text(json.dumps(doc))
    return path


def test_catalogue_lists_every_suite():
    text = catalogue()
    for name in SUITES:
        assert name in text


def test_passing_scenario_exits_zero(capsys):
    assert main([str(INTERVAL)]) == 0
    out = capsys.readouterr().out
    assert "status pass" in out


def test_failing_scenario_exits_one(failing, capsys):
    assert main([str(failing)]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "got 1/3" in out


def test_invalid_scenario_exits_two(capsys):
    assert main([str(ZOO / "broken" / "broken_groupoid.json")]) == 2
    out = capsys.readouterr().out
    assert "invalid groupoid G" in out and "charts [1]" in out


def test_unparseable_file_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "bad",\n  "objects": [')
    assert main([str(bad)]) == 2
    assert "line 2" in capsys.readouterr().out


def test_no_arguments_exits_two(capsys):
    assert main([]) == 2
    assert "give scenario files" in capsys.readouterr().err


def test_list_does_not_run(capsys):
    assert main(["--list", str(MIRROR)]) == 0
    out = capsys.readouterr().out
    assert "mirror.json" in out and "jk(groupoid=Y)" in out
    assert "status" not in out


def test_machine_format_and_out(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    assert main(["--format", "machine", "--out", str(out_path), str(INTERVAL)]) == 0
    printed = json.loads(capsys.readouterr().out)
    written = json.loads(out_path.read_text())
    assert printed["canonical"] == written["canonical"]
    scenario = written["canonical"]["scenarios"][0]
    assert scenario["file"] == "interval.json"
    assert {"index", "suite", "label", "arguments", "expect", "verdict", "status", "checks", "witnesses"} <= set(scenario["suites"][0])
    assert "interval.json" in written["timings"]


def test_parallel_matches_serial():
    serial = harness.run([INTERVAL, MIRROR])
    parallel = harness.run([INTERVAL, MIRROR], parallel=2)
    assert harness.canonical_json(serial) == harness.canonical_json(parallel)


def test_negative_fixture_reports_witness():
    report = harness.run([MIRROR])
    entry = next(e for e in report["canonical"]["scenarios"][0]["suites"] if e["expect"] == "violated" and e["suite"] == "integral")
    assert entry["verdict"] == "violated" and entry["status"] == "pass"
    assert entry["witnesses"] and entry["witnesses"][0]["detail"] == "got 1/3"


def test_only_filter():
    report = harness.run([MIRROR], only={"jk"})
    suites = report["canonical"]["scenarios"][0]["suites"]
    assert suites and all(e["suite"] == "jk" for e in suites)


def test_bad_options_exit_two(capsys):
    assert main(["--parallel", "0", str(INTERVAL)]) == 2
