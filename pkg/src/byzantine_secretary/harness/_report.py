"""CSV and markdown emission for experiment reports."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping, Sequence

from byzantine_secretary.harness._experiment import ExperimentReport

COLUMNS = (
    "algo",
    "family",
    "n",
    "K",
    "trials",
    "seed",
    "success_rate",
    "ci_low",
    "ci_high",
    "mean_value",
    "ratio",
    "wall_ms",
)


def report_row(report: ExperimentReport | Mapping, *, include_timing: bool = True) -> dict:
    data = report.to_dict() if isinstance(report, ExperimentReport) else dict(report)
    row = {}
    for col in COLUMNS:
        value = data.get(col)
        if col == "wall_ms" and not include_timing:
            value = None
        if isinstance(value, float) and col != "wall_ms":
            value = repr(value)
        elif col == "wall_ms" and value not in (None, ""):
            value = f"{float(value):.1f}"
        row[col] = "" if value is None else value
    return row


def render_csv(reports: Iterable, *, include_timing: bool = True) -> str:
    """CSV text with the fixed column set; an empty input yields the header only."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report_row(report, include_timing=include_timing))
    return buffer.getvalue()


def write_csv(reports: Iterable, path: str, *, include_timing: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(reports, include_timing=include_timing))


def read_csv(path: str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(value) -> str:
    if value in (None, ""):
        return ""
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    if number.is_integer() and abs(number) < 1e15:
        return str(int(number))
    return f"{number:.4g}"


def render_markdown(rows: Sequence[Mapping]) -> str:
    """Markdown table with one row per run."""
    lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "|".join("---" for _ in COLUMNS) + "|"]
    for row in rows:
        data = report_row(row) if isinstance(row, ExperimentReport) else row
        lines.append("| " + " | ".join(_fmt(data.get(col)) for col in COLUMNS) + " |")
    return "\n".join(lines) + "\n"
