from __future__ import annotations

import json

import pytest

from inhomwalk.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, run

LAZY = {"atoms": [-1, 0, 1], "weights": [1, 2, 1]}


def test_version(capsys):
    assert run(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("inhomwalk ")


def test_usage_error():
    assert run([]) == EXIT_CONFIG
    assert run(["verify"]) == EXIT_CONFIG


def test_law_check(write_json, capsys):
    assert run(["law", "check", str(write_json("law.json", LAZY))]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["variance"] == pytest.approx(0.5)
    assert out["positive_part"] == pytest.approx(0.25)
    assert out["periodicity"] == {"irreducible": True, "aperiodic": True}


def test_law_check_membership(write_json, lazy_config, capsys):
    law = str(write_json("law.json", LAZY))
    assert run(["law", "check", law, "--config", str(write_json("ok.json", lazy_config()))]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["membership"]["member"] is True

    config = lazy_config()
    config["family"]["class"]["minorant"] = {"2": 0.1}
    assert run(["law", "check", law, "--config", str(write_json("bad.json", config))]) == EXIT_FAIL
    assert json.loads(capsys.readouterr().out)["membership"]["member"] is False


def test_law_check_invalid_law(write_json):
    assert run(["law", "check", str(write_json("law.json", {"atoms": [1, 2], "weights": [1]}))]) == EXIT_CONFIG


def test_verify_writes_report(write_json, lazy_config, tmp_path):
    config = str(write_json("c.json", lazy_config()))
    out = tmp_path / "out" / "ballot.json"
    assert run(["verify", "ballot", "--config", config, "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["theorem_id"] == "ballot"
    assert report["verdict"] == "pass"

    again = tmp_path / "again.json"
    assert run(["verify", "ballot", "--config", config, "--out", str(again)]) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()


def test_verify_csv_to_stdout(write_json, lazy_config, capsys):
    config = str(write_json("c.json", lazy_config()))
    assert run(["verify", "ballot", "--config", config, "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "theorem_id,check,member,n,u,exact,ratio,status,reason"


def test_verify_tight_cap_fails(write_json, lazy_config, tmp_path):
    config = str(write_json("c.json", lazy_config()))
    assert run(["verify", "ballot", "--config", config, "--spread-cap", "1.0", "--out", str(tmp_path / "r.json")]) == EXIT_FAIL


def test_verify_unknown_theorem(write_json, lazy_config):
    assert run(["verify", "nope", "--config", str(write_json("c.json", lazy_config()))]) == EXIT_CONFIG


def test_verify_bad_override(write_json, lazy_config):
    assert run(["verify", "ballot", "--config", str(write_json("c.json", lazy_config())), "--mc-samples", "10"]) == EXIT_CONFIG


def test_malformed_config(write_json):
    assert run(["verify", "ballot", "--config", str(write_json("c.json", "{ nope"))]) == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert run(["prob", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_prob(write_json, lazy_config, capsys):
    config = lazy_config(task="prob", query={"n": 2, "centered": False, "constraint": {"lower": 0, "endpoint": 0}})
    assert run(["prob", "--config", str(write_json("c.json", config))]) == EXIT_OK
    (row,) = json.loads(capsys.readouterr().out)
    assert row["probability"] == pytest.approx(0.3125)


def test_prob_infeasible_is_zero(write_json, lazy_config, capsys):
    config = lazy_config(task="prob", query={"n": 4, "constraint": {"lower": 5, "upper": 4}})
    assert run(["prob", "--config", str(write_json("c.json", config))]) == EXIT_OK
    (row,) = json.loads(capsys.readouterr().out)
    assert row["probability"] == 0.0
    assert row["log_probability"] == "-inf"


def test_prob_needs_prob_task(write_json, lazy_config):
    assert run(["prob", "--config", str(write_json("c.json", lazy_config()))]) == EXIT_CONFIG


def test_sample(write_json, lazy_config, capsys):
    config = lazy_config(task="sample", query={"n": 8, "samples": 5000, "constraint": {"lower": 0}})
    assert run(["sample", "--config", str(write_json("c.json", config)), "--seed", "3"]) == EXIT_OK
    (row,) = json.loads(capsys.readouterr().out)
    assert row["method"] == "rejection"
    assert row["seed"] == 3
    assert 0.0 < row["value"] < 1.0


def test_sample_importance(write_json, lazy_config, capsys):
    config = lazy_config(
        task="sample", query={"n": 8, "samples": 5000, "importance": True, "constraint": {"lower": 0, "endpoint": 2}}
    )
    assert run(["sample", "--config", str(write_json("c.json", config))]) == EXIT_OK
    (row,) = json.loads(capsys.readouterr().out)
    assert row["method"] == "importance"
    assert row["value"] > 0


def test_sample_degenerate_acceptance(write_json, lazy_config):
    config = lazy_config(task="sample", query={"n": 40, "samples": 10_000, "constraint": {"endpoint": 30}})
    assert run(["sample", "--config", str(write_json("c.json", config))]) == EXIT_FAIL


def test_report_merge(write_json, lazy_config, tmp_path):
    config = str(write_json("c.json", lazy_config()))
    first = tmp_path / "a.json"
    assert run(["verify", "ballot", "--config", config, "--out", str(first)]) == EXIT_OK
    merged = tmp_path / "merged.json"
    assert run(["report", "--merge", str(first), "--out", str(merged)]) == EXIT_OK
    doc = json.loads(merged.read_text(encoding="utf-8"))
    assert doc["verdict"] == "pass"
    assert list(doc["sha256"]) == ["a.json"]


def test_report_merge_rejects_garbage(write_json, tmp_path):
    assert run(["report", "--merge", str(write_json("x.json", "[1, 2]")), "--out", str(tmp_path / "m.json")]) == EXIT_CONFIG
