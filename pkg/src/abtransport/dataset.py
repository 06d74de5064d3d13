"""Rectangular result tables and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

CSV_FLOAT = "%.16e"  # 17 significant digits


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    columns: tuple
    units: tuple
    rows: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise DatasetError(f"{self.name}: rows must form a table with {len(self.columns)} columns")
        if len(self.units) != len(self.columns):
            raise DatasetError(f"{self.name}: one unit per column is required")
        if not np.all(np.isfinite(rows)):
            bad = int(np.argwhere(~np.isfinite(rows))[0, 0])
            raise DatasetError(f"{self.name}: row {bad} is not finite")
        object.__setattr__(self, "rows", rows)

    @property
    def header(self) -> list:
        return [f"{c} [{u}]" if u else c for c, u in zip(self.columns, self.units)]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def metadata(self) -> dict:
        return {"name": self.name, "columns": list(self.columns), "units": list(self.units), "provenance": self.provenance}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([CSV_FLOAT % v for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = self.metadata()
        payload["rows"] = self.rows.tolist()
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    def write(self, directory, fmt: str = "csv") -> list:
        """Write the table (plus a metadata sidecar for CSV); returns the paths."""
        os.makedirs(directory, exist_ok=True)
        base = os.path.join(directory, self.name)
        if fmt == "json":
            path = base + ".json"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_json())
            return [path]
        if fmt != "csv":
            raise DatasetError(f"unknown format {fmt!r}")
        path = base + ".csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        meta = base + ".meta.json"
        with open(meta, "w", encoding="utf-8", newline="") as fh:
            fh.write(json.dumps(self.metadata(), indent=1, sort_keys=True) + "\n")
        return [path, meta]


def read_csv(path) -> tuple:
    """Header and float rows of a dataset CSV file."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, rows
