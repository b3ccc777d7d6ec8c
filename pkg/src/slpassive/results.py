"""Tabular sweep results and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__


def format_value(x):
    """17 significant digits for floats; 'inf' and 'nan' as strings."""
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(f"{x:.17g}")
    return x


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def header(self) -> dict:
        meta = {"tool": "slpassive", "version": __version__}
        meta.update(self.metadata)
        return meta

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.header().items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_csv_cell(format_value(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[format_value(v) for v in row] for row in self.rows]
        doc = {"metadata": self.header(), "columns": self.columns, "rows": rows}
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            elif line:
                body.append(line)
        reader = csv.reader(body)
        columns = next(reader)
        rows = [tuple(_parse_cell(c) for c in r) for r in reader]
        return cls(columns, rows, meta)


def _csv_cell(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v


def _parse_cell(c: str):
    if c in ("inf", "-inf", "nan"):
        return float(c)
    for conv in (int, float):
        try:
            return conv(c)
        except ValueError:
            pass
    return c
