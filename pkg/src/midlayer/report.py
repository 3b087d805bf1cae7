"""Reports and their byte-stable serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .scalars import fmt_rational

SCHEMA_VERSION = "1"


@dataclass
class Report:
    command: str
    inputs: dict
    results: dict
    warnings: list[str] = field(default_factory=list)
    timing: dict | None = None
    # optional flat view for CSV output: {"columns": [...], "rows": [[...], ...]}
    table: dict | None = None

    def as_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "command": self.command,
               "inputs": self.inputs, "results": self.results,
               "warnings": sorted(set(self.warnings))}
        if self.timing is not None:
            out["timing"] = self.timing
        return out


def _float_text(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(repr(x))
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys, Fractions as "p/q" strings and %.17g doubles."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, Fraction):
        return json.dumps(fmt_rational(obj))
    if isinstance(obj, float):
        return _float_text(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}"
                          for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, Fraction)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        body = ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return fmt_rational(v)
    if isinstance(v, float):
        return _float_text(v) if math.isfinite(v) else repr(v)
    if isinstance(v, (dict, list)):
        return dumps(v, indent=0).replace("\n", "")
    return "" if v is None else str(v)


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    else:
        out.append((prefix, obj))


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    table = report.table
    if table:
        header = table["columns"]
        w.writerow(header)
        for row in table["rows"]:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()
    w.writerow(["key", "value"])
    rows: list = []
    _flatten("", {"command": report.command, "results": report.results,
                  "warnings": sorted(set(report.warnings))}, rows)
    for k, v in rows:
        w.writerow([k, _cell(v)])
    return buf.getvalue()


def emit(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (dumps(report.as_dict()) + "\n").encode()
    if fmt == "csv":
        return to_csv(report).encode()
    raise ValueError(f"unknown format {fmt!r}")
