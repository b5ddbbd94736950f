import json
import subprocess
import sys

import pytest

from hybridgrid import data_path
from hybridgrid.cli import PIPELINE_ARTIFACTS, build_parser, main

CASE = str(data_path("demo_case30.json"))
PROFILES = str(data_path("demo_profiles.json"))
SUBCOMMANDS = ["preprocess", "opf", "plan", "cost", "evaluate", "pipeline", "count-trees"]


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_parser_lists_all_subcommands():
    text = build_parser().format_help()
    assert all(cmd in text for cmd in SUBCOMMANDS)


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "hybridgrid.cli", "count-trees", CASE],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["spanning_trees"].isdigit()


def test_corrupted_case_exit_1_no_artifacts(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"base_mva": 100, "buses": [')
    out = tmp_path / "out"
    assert main(["pipeline", str(bad), "--profiles", PROFILES, "-o", str(out)]) == 1
    assert not out.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.json"]
    assert "error" in capsys.readouterr().err


def test_validation_error_exit_1(tmp_path):
    case = json.loads(open(CASE).read())
    case["branches"][0]["to_bus"] = 99
    p = tmp_path / "c.json"
    p.write_text(json.dumps(case))
    assert main(["preprocess", str(p), "-o", str(tmp_path / "o.json")]) == 1
    assert not (tmp_path / "o.json").exists()


def test_stepwise_commands(tmp_path, capsys):
    base = tmp_path / "base.json"
    report = tmp_path / "removed.csv"
    assert main(["preprocess", CASE, "-o", str(base), "--report", str(report)]) == 0
    assert report.read_text().startswith("id,km\n")
    assert main(["opf", str(base), "--out", str(tmp_path / "opf.json")]) == 0
    assert json.loads((tmp_path / "opf.json").read_text())["status"] == "optimal"
    assert main(["opf", str(base), "--hour", "10", "--profiles", PROFILES,
                 "--out", str(tmp_path / "opf10.json")]) == 0
    plan = tmp_path / "plan.json"
    htg = tmp_path / "htg.json"
    assert main(["plan", str(base), "-o", str(plan), "--grid-out", str(htg)]) == 0
    assert main(["cost", str(plan), str(base), "--reference", CASE, "-o", str(tmp_path / "cost.csv")]) == 0
    assert "savings,total" in (tmp_path / "cost.csv").read_text()
    assert main(["evaluate", str(base), str(htg), "--profiles", PROFILES, "--weeks", "0",
                 "-o", str(tmp_path / "eval")]) == 0
    assert (tmp_path / "eval" / "compare.csv").read_text().count("\n") == 169
    capsys.readouterr()


def test_opf_infeasible_exit_2(tmp_path):
    case = json.loads(open(CASE).read())
    for b in case["buses"]:
        b["load_mw"] *= 50
    p = tmp_path / "c.json"
    p.write_text(json.dumps(case))
    assert main(["opf", str(p), "--out", str(tmp_path / "o.json")]) == 2
    assert json.loads((tmp_path / "o.json").read_text())["status"] == "infeasible"


def test_bad_weeks_argument(tmp_path):
    assert main(["evaluate", CASE, CASE, "--profiles", PROFILES, "--weeks", "x",
                 "-o", str(tmp_path / "e")]) == 1


def test_pipeline_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["pipeline", CASE, "--profiles", PROFILES, "-o", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted(PIPELINE_ARTIFACTS)
    summary = json.loads(capsys.readouterr().out)
    assert summary["weekly_delta"] > 0
