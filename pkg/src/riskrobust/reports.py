"""Tabular experiment reports: CSV rendering plus a JSON metadata sidecar."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA = "riskrobust-report-v1"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, np.floating):
        return _fmt(float(v))
    return str(v)


def _parse_cell(s):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if hasattr(v, "item") and callable(v.item):
        return _json_safe(v.item())
    return v


@dataclass
class ExperimentReport:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, expected {len(self.columns)}")
        self.rows.append(tuple(values))

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def to_json(self):
        return json.dumps(
            {
                "schema": SCHEMA,
                "columns": list(self.columns),
                "rows": [[_json_safe(v) for v in r] for r in self.rows],
                "metadata": _json_safe(self.metadata),
            },
            indent=2,
            sort_keys=True,
        )

    def metadata_json(self):
        return json.dumps(
            {"schema": SCHEMA, "columns": list(self.columns), "metadata": _json_safe(self.metadata)},
            indent=2,
            sort_keys=True,
        )

    def write(self, path, fmt="csv"):
        """Write the report; CSV output gets a ``.json`` metadata sidecar."""
        path = Path(path)
        if fmt == "json":
            path.write_text(self.to_json() + "\n", encoding="utf-8")
            return [path]
        path.write_bytes(report_render(self).encode("utf-8"))
        side = path.with_suffix(".json")
        side.write_text(self.metadata_json() + "\n", encoding="utf-8")
        return [path, side]


def report_render(report: ExperimentReport) -> str:
    """CSV with a header row, 12 significant digits and LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def report_parse(text: str, metadata=None) -> ExperimentReport:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty report")
    return ExperimentReport(rows[0], [tuple(_parse_cell(c) for c in r) for r in rows[1:]], dict(metadata or {}))
