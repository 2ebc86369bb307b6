"""Tabular results and their deterministic serialization.

Tables round-trip byte-identically: cells are formatted once (shortest
float repr), parsed back as strings, and re-emitted verbatim. CSV output is
RFC-4180-style (comma separators, quote doubling, LF line endings) with the
metadata block as leading ``# key=value`` comment lines; JSON output is a
single object {meta, columns, rows}.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

__all__ = ["ResultTable", "format_cell", "emit", "read_csv", "read_json"]

FORMATS = ("csv", "json")


def format_cell(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    raise TypeError(f"unsupported cell type {type(value).__name__}")


@dataclass
class ResultTable:
    """Named numeric/text columns plus a metadata block echoing the config."""

    columns: list[str]
    rows: list[list[Any]]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row {i} has {len(row)} cells, expected {len(self.columns)}"
                )

    def column(self, name: str) -> list[Any]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _render_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for key in sorted(table.meta):
        buf.write(f"# {key}={format_cell(table.meta[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _render_json(table: ResultTable) -> str:
    payload = {
        "meta": {k: table.meta[k] for k in sorted(table.meta)},
        "columns": list(table.columns),
        "rows": [[_json_cell(v) for v in row] for row in table.rows],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _json_cell(value: Any):
    if isinstance(value, (str, bool, int, float)):
        return value
    raise TypeError(f"unsupported cell type {type(value).__name__}")


def emit(table: ResultTable, fmt: str, path: str) -> None:
    """Write the table atomically (temp file + rename in the target directory)."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    text = _render_csv(table) if fmt == "csv" else _render_json(table)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gtmkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: str) -> ResultTable:
    """Parse an emitted CSV; all cells and metadata values come back as strings."""
    meta: dict[str, Any] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("# "):
                body = line[2:].rstrip("\n")
                key, _, value = body.partition("=")
                meta[key] = value
            else:
                data_lines.append(line)
    reader = csv.reader(io.StringIO("".join(data_lines)))
    rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: missing header row")
    return ResultTable(columns=rows[0], rows=[list(r) for r in rows[1:]], meta=meta)


def read_json(path: str) -> ResultTable:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return ResultTable(
        columns=list(payload["columns"]),
        rows=[list(r) for r in payload["rows"]],
        meta=dict(payload["meta"]),
    )
