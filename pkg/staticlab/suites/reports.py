"""Report files and console tables for verification runs.

A run directory holds ``checks.jsonl`` (one record per check), one JSON report
per (model, suite) pair, ``summary.json`` and CSV files for tabular side data
such as slice geometry, ODE trajectories and the catalog.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from enum import Enum
from pathlib import Path
from typing import Any

from loguru import logger

from ..errors import StaticLabError
from .base import CheckResult, CheckStatus

__all__ = [
    "ReportView",
    "CHECKS_FILE",
    "SUMMARY_FILE",
    "report_stem",
    "write_json",
    "write_jsonl",
    "write_csv",
    "summarize",
    "write_run",
    "load_run",
    "format_table",
]

CHECKS_FILE = "checks.jsonl"
SUMMARY_FILE = "summary.json"


class ReportView(str, Enum):
    """Available console table formats."""

    COMPACT = "compact"
    FULL = "full"
    FAILED = "failed"


REPORT_VIEWS = {
    "compact": {"fields": ["model", "suite", "check", "status"]},
    "full": {"fields": ["model", "suite", "check", "status", "value", "tolerance"]},
    "failed": {"fields": ["model", "suite", "check", "value", "tolerance"]},
}


def _jsonable(value: Any) -> Any:
    """Non-finite floats become strings; numpy scalars and tuples become plain JSON."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    return value


def report_stem(model: str, suite: str) -> str:
    return f"{model}.{suite}" if model != "-" else suite


def write_json(path: Path, payload: Any) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_jsonl(path: Path, records: list[dict[str, Any]]) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(_jsonable(record), sort_keys=True))
            f.write("\n")
    return path


def write_csv(path: Path, rows: list[dict[str, Any]]) -> Path:
    """Write rows with the union of their keys as columns, in first-seen order."""
    fields: list[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _jsonable(v) for k, v in row.items()})
    return path


def summarize(results: list[CheckResult]) -> dict[str, Any]:
    counts = Counter(r.status.value for r in results)
    by_suite: dict[str, Counter[str]] = {}
    for r in results:
        by_suite.setdefault(r.suite, Counter())[r.status.value] += 1
    return {
        "checks": len(results),
        "passed": counts.get(CheckStatus.PASSED.value, 0),
        "failed": counts.get(CheckStatus.FAILED.value, 0),
        "skipped": counts.get(CheckStatus.SKIPPED.value, 0),
        "suites": {name: dict(c) for name, c in sorted(by_suite.items())},
        "failures": [f"{r.model}/{r.suite}/{r.check}" for r in results if r.failed],
    }


def write_run(
    directory: Path,
    results: list[CheckResult],
    artifacts: dict[str, list[dict[str, Any]]],
    config: dict[str, Any],
) -> list[Path]:
    """Write every report file of a run; results are expected in a fixed order."""
    directory.mkdir(parents=True, exist_ok=True)
    written = [write_jsonl(directory / CHECKS_FILE, [r.to_record() for r in results])]

    grouped: dict[tuple[str, str], list[CheckResult]] = {}
    for r in results:
        grouped.setdefault((r.model, r.suite), []).append(r)
    for (model, suite), group in grouped.items():
        payload = {
            "model": model,
            "suite": suite,
            "passed": not any(r.failed for r in group),
            "checks": [r.to_record() for r in group],
        }
        written.append(write_json(directory / f"{report_stem(model, suite)}.json", payload))

    for stem, rows in sorted(artifacts.items()):
        if rows:
            written.append(write_csv(directory / f"{stem}.csv", rows))

    summary = summarize(results) | {"config": config}
    written.append(write_json(directory / SUMMARY_FILE, summary))
    logger.info(f"Wrote {len(written)} report files to {directory}")
    return written


def load_run(directory: Path) -> list[dict[str, Any]]:
    """Read the check records of a previous run."""
    path = Path(directory) / CHECKS_FILE
    if not path.exists():
        raise StaticLabError(f"No {CHECKS_FILE} in {directory}; is it a staticlab report directory?")
    records = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise StaticLabError(f"{path}:{number}: malformed record: {e}") from e
    return records


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


def format_table(records: list[dict[str, Any]], view: ReportView = ReportView.FULL) -> str:
    """Plain-text table of check records in the given view."""
    fields = REPORT_VIEWS[view.value]["fields"]
    if view is ReportView.FAILED:
        records = [r for r in records if r.get("status") == CheckStatus.FAILED.value]
    rows = [[_cell(r.get(k)) for k in fields] for r in records]
    widths = [max([len(k), *(len(row[i]) for row in rows)]) for i, k in enumerate(fields)]
    lines = ["  ".join(k.ljust(w) for k, w in zip(fields, widths, strict=True))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths, strict=True)) for row in rows)
    return "\n".join(lines)
