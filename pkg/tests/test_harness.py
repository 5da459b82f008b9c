from __future__ import annotations

import ast
import logging
from pathlib import Path

import pytest

import inhomwalk

from inhomwalk.harness import GridRow, RunContext
from inhomwalk.harness.context import PARALLELISM_ENV, TELEMETRY_ENV, default_parallelism
from inhomwalk.harness.report import build_report, within_cap


def _row(check: str, x: int, status: str = "ok") -> GridRow:
    if status == "ok":
        return GridRow(check=check, member="m", inputs={"n": x}, exact=0.5, ratio=1.0)
    return GridRow.skipped(check, "m", {"n": x}, "zero probability")


@pytest.mark.parametrize(
    "kwargs",
    [{"spread_cap": 0.5}, {"parallelism": 0}, {"mc_samples": 100}, {"seed": -1}, {"seed": 2**64}],
)
def test_context_validation(kwargs):
    with pytest.raises(ValueError):
        RunContext(**kwargs)


def test_context_map_preserves_order():
    items = list(range(20))
    assert RunContext(parallelism=4).map(lambda x: x * x, items) == [x * x for x in items]


def test_default_parallelism_from_env(monkeypatch):
    monkeypatch.setenv(PARALLELISM_ENV, "3")
    assert default_parallelism() == 3
    monkeypatch.setenv(PARALLELISM_ENV, "zero")
    assert default_parallelism() == 1


def test_emit_prefers_hook(monkeypatch, caplog):
    seen = []
    monkeypatch.setenv(TELEMETRY_ENV, "1")
    RunContext(telemetry_hook=lambda stage, payload: seen.append((stage, payload))).emit("start", {"a": 1})
    assert seen == [("start", {"a": 1})]
    with caplog.at_level(logging.INFO, logger="inhomwalk.harness.context"):
        RunContext().emit("start", {"a": 1})
    assert "[Harness][start]" in caplog.text


def test_emit_silent_without_env(monkeypatch, caplog):
    monkeypatch.delenv(TELEMETRY_ENV, raising=False)
    with caplog.at_level(logging.INFO, logger="inhomwalk.harness.context"):
        RunContext().emit("start", {})
    assert caplog.text == ""


def test_report_sorts_rows():
    report = build_report(
        "ballot", "f", [_row("b", 2), _row("a", 9), _row("a", 1)], fitted={}, spread=1.0, spread_cap=10.0, passed=True
    )
    assert [(r.check, r.inputs["n"]) for r in report.rows] == [("a", 1), ("a", 9), ("b", 2)]
    assert report.passed


def test_empty_grid_passes_vacuously(caplog):
    with caplog.at_level(logging.WARNING):
        report = build_report("ballot", "f", [], fitted={}, spread=None, spread_cap=10.0, passed=False)
    assert report.passed
    assert "empty grid: vacuous pass" in report.notes
    assert "passing vacuously" in caplog.text


def test_blockers_fail_even_an_empty_grid(caplog):
    with caplog.at_level(logging.WARNING):
        report = build_report(
            "ballot", "f", [], fitted={}, spread=None, spread_cap=10.0, passed=True, blockers=["law outside the class"]
        )
    assert not report.passed
    assert report.notes == ("law outside the class",)
    assert "blocked" in caplog.text


def test_blockers_override_passing_rows():
    report = build_report(
        "ballot", "f", [_row("a", 1)], fitted={}, spread=1.0, spread_cap=10.0, passed=True, blockers=["x"]
    )
    assert report.verdict == "fail"


def test_too_many_skips_fail():
    rows = [_row("a", 1), _row("a", 2, "skipped"), _row("a", 3, "skipped")]
    report = build_report("ballot", "f", rows, fitted={}, spread=1.0, spread_cap=10.0, passed=True)
    assert not report.passed
    assert report.skipped == 2
    assert "2 of 3 grid points skipped" in report.notes


def test_half_skipped_still_uses_envelope():
    rows = [_row("a", 1), _row("a", 2, "skipped")]
    report = build_report("ballot", "f", rows, fitted={}, spread=1.0, spread_cap=10.0, passed=True)
    assert report.passed


def test_report_dict_shape():
    report = build_report("ballot", "f", [_row("a", 1)], fitted={"c": 1.0}, spread=1.0, spread_cap=10.0, passed=True)
    doc = report.to_dict()
    assert doc["theorem_id"] == "ballot"
    assert doc["verdict"] == "pass"
    assert doc["rows"][0]["inputs"] == {"n": 1}
    assert "version" in doc


def test_within_cap():
    assert within_cap(10.0, 10.0)
    assert not within_cap(float("inf"), 10.0)
    assert not within_cap(None, 10.0)


def test_core_imports_go_through_adapter():
    root = Path(inhomwalk.__file__).parent
    offenders = []
    for path in sorted(root.rglob("*.py")):
        if path.name == "core_adapter.py":
            continue
        for node in ast.walk(ast.parse(path.read_text(encoding="utf-8"))):
            if isinstance(node, ast.ImportFrom) and (node.module or "").startswith("inhomwalk_core"):
                offenders.append(path.name)
            elif isinstance(node, ast.Import) and any(a.name.startswith("inhomwalk_core") for a in node.names):
                offenders.append(path.name)
    assert offenders == []
