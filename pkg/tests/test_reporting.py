from __future__ import annotations

import hashlib
import json
import math

import pytest

from inhomwalk.errors import ConfigInvalidError
from inhomwalk.harness import GridRow
from inhomwalk.harness.report import build_report
from inhomwalk.reporting import (
    bundle_checksum,
    dumps,
    merge_report_files,
    render_reports,
    render_rows,
    report_columns,
    reports_to_csv,
    sha256_file,
)


def _report(theorem_id: str, passed: bool = True, spread: float | None = 1.0):
    rows = [GridRow("ballot", "lazy", {"n": 16, "u": 1}, exact=0.5, ratio=2.0)]
    return build_report(theorem_id, "lazy", rows, fitted={"c": 1.0}, spread=spread, spread_cap=10.0, passed=passed)


def test_dumps_spells_non_finite_values():
    doc = json.loads(dumps({"a": math.inf, "b": [-math.inf, math.nan], "c": 1.5}))
    assert doc == {"a": "inf", "b": ["-inf", "nan"], "c": 1.5}


def test_dumps_is_sorted_and_newline_terminated():
    text = dumps({"b": 1, "a": 2})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')


def test_report_columns_follow_registry():
    assert report_columns([_report("ballot")]) == ["theorem_id", "check", "member", "n", "u", "exact", "ratio", "status", "reason"]


def test_reports_to_csv():
    lines = reports_to_csv([_report("ballot")]).splitlines()
    assert lines[0] == "theorem_id,check,member,n,u,exact,ratio,status,reason"
    assert lines[1] == "ballot,ballot,lazy,16,1,0.5,2.0,ok,"


def test_render_reports_single_and_many():
    single = json.loads(render_reports([_report("ballot")], "json"))
    assert single["theorem_id"] == "ballot"
    many = json.loads(render_reports([_report("ballot"), _report("llt", passed=False)], "json"))
    assert many["verdict"] == "fail"
    assert [r["theorem_id"] for r in many["reports"]] == ["ballot", "llt"]


def test_render_reports_is_deterministic():
    assert render_reports([_report("ballot")], "json") == render_reports([_report("ballot")], "json")


def test_render_rows_csv():
    text = render_rows([{"member": "lazy", "n": 4, "probability": 0.25}], "csv")
    assert text.splitlines() == ["member,n,probability", "lazy,4,0.25"]


def test_sha256_file(tmp_path):
    path = tmp_path / "x.json"
    path.write_bytes(b"abc")
    assert sha256_file(path) == hashlib.sha256(b"abc").hexdigest()


def test_bundle_checksum_ignores_insertion_order():
    assert bundle_checksum({"a": "1", "b": "2"}) == bundle_checksum({"b": "2", "a": "1"})
    assert bundle_checksum({"a": "1", "b": "2"}) != bundle_checksum({"a": "2", "b": "1"})


def test_merge_reports(tmp_path):
    first = tmp_path / "ballot.json"
    second = tmp_path / "all.json"
    first.write_text(render_reports([_report("ballot")], "json"), encoding="utf-8")
    second.write_text(render_reports([_report("llt"), _report("theta", spread=None)], "json"), encoding="utf-8")
    merged = merge_report_files([first, second])
    assert merged["verdict"] == "pass"
    assert [r["theorem_id"] for r in merged["reports"]] == ["ballot", "llt", "theta"]
    assert merged["sha256"] == {"all.json": sha256_file(second), "ballot.json": sha256_file(first)}
    assert merged["bundle_sha256"] == bundle_checksum(merged["sha256"])


def test_merge_failing_report(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(render_reports([_report("ballot", passed=False)], "json"), encoding="utf-8")
    assert merge_report_files([path])["verdict"] == "fail"


def test_merge_rejects_foreign_json(tmp_path):
    path = tmp_path / "r.json"
    path.write_text('{"hello": 1}', encoding="utf-8")
    with pytest.raises(ConfigInvalidError):
        merge_report_files([path])
