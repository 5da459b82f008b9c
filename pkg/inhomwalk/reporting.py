"""Report serialization (JSON, CSV) and checksummed report merging.

Output is a pure function of the report: keys are sorted, floats use their
shortest round-trip repr and non-finite values are spelled as strings.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from inhomwalk.errors import ConfigInvalidError
from inhomwalk.harness.registry import REGISTRY
from inhomwalk.harness.report import VerificationReport
from inhomwalk.types import MergedReportDict, OutputFormat, Verdict, VerificationReportDict
from inhomwalk.version import __version__

logger = logging.getLogger(__name__)

REPORT_PREFIX = ("theorem_id", "check", "member")
REPORT_SUFFIX = ("exact", "ratio", "status", "reason")


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def dumps(document: Any) -> str:
    return json.dumps(_jsonable(document), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else _jsonable(value)
    return str(value)


def report_columns(reports: Sequence[VerificationReport]) -> list[str]:
    """Fixed per-verifier input columns, unioned in registry order."""
    inputs: list[str] = []
    for report in reports:
        entry = REGISTRY.get(report.theorem_id)
        names = entry.input_columns if entry is not None else ()
        extra = sorted({key for row in report.rows for key in row.inputs} - set(names))
        for name in (*names, *extra):
            if name not in inputs:
                inputs.append(name)
    return [*REPORT_PREFIX, *inputs, *REPORT_SUFFIX]


def reports_to_csv(reports: Sequence[VerificationReport]) -> str:
    columns = report_columns(reports)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for report in reports:
        for row in report.rows:
            record = {"theorem_id": report.theorem_id, "check": row.check, "member": row.member}
            record.update(row.inputs)
            record.update(exact=row.exact, ratio=row.ratio, status=row.status, reason=row.reason)
            writer.writerow([_cell(record.get(col)) for col in columns])
    return buf.getvalue()


def rows_to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def _verdict(verdicts: Iterable[str]) -> Verdict:
    return "pass" if all(v == "pass" for v in verdicts) else "fail"


def render_reports(reports: Sequence[VerificationReport], fmt: OutputFormat) -> str:
    if fmt == "csv":
        return reports_to_csv(reports)
    if len(reports) == 1:
        return dumps(reports[0].to_dict())
    return dumps(
        {
            "verdict": _verdict(r.verdict for r in reports),
            "reports": [r.to_dict() for r in reports],
            "version": __version__,
        }
    )


def render_rows(rows: Sequence[Mapping[str, Any]], fmt: OutputFormat) -> str:
    return rows_to_csv(rows) if fmt == "csv" else dumps(list(rows))


def write_text(path: str | Path, text: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info("[Reporting][write] path=%s bytes=%s", out, len(text.encode("utf-8")))
    return out


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1024 * 1024), b""):
            digest.update(chunk)
    return digest.hexdigest()


def bundle_checksum(checksums: Mapping[str, str]) -> str:
    digest = hashlib.sha256()
    for name in sorted(checksums):
        digest.update(name.encode("utf-8"))
        digest.update(b"\0")
        digest.update(checksums[name].encode("utf-8"))
        digest.update(b"\0")
    return digest.hexdigest()


def _load_report_documents(path: Path) -> list[VerificationReportDict]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(path=str(path), field="<file>", reason=f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    except OSError as exc:
        raise ConfigInvalidError(path=str(path), field="<file>", reason=f"unreadable: {exc}") from exc
    if isinstance(raw, dict) and isinstance(raw.get("reports"), list):
        docs = raw["reports"]
    else:
        docs = [raw]
    for i, doc in enumerate(docs):
        if not isinstance(doc, dict) or "theorem_id" not in doc or doc.get("verdict") not in ("pass", "fail"):
            raise ConfigInvalidError(path=str(path), field=f"reports[{i}]", reason="not a verification report")
    return docs


def merge_report_files(paths: Sequence[str | Path]) -> MergedReportDict:
    """Concatenate JSON reports, recompute the verdict conjunction, digest every input."""
    if not paths:
        raise ValueError("nothing to merge")
    reports: list[VerificationReportDict] = []
    checksums: dict[str, str] = {}
    for raw_path in paths:
        path = Path(raw_path)
        reports.extend(_load_report_documents(path))
        checksums[path.name if path.name not in checksums else str(path)] = sha256_file(path)
    return {
        "verdict": _verdict(doc["verdict"] for doc in reports),
        "reports": reports,
        "sha256": dict(sorted(checksums.items())),
        "bundle_sha256": bundle_checksum(checksums),
        "version": __version__,
    }
