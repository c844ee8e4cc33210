"""Datasets and the CSV contract: header row, numeric cells, last column is y."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from srurgs.errors import DatasetError, SchemaError


@dataclass(frozen=True)
class Dataset:
    names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    target_name: str = "y"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[1] != len(self.names):
            raise SchemaError(f"{len(self.names)} names for {X.shape[1]} columns")
        if X.shape[0] != y.shape[0]:
            raise SchemaError("X and y have different numbers of rows")
        if y.shape[0] < 2:
            raise SchemaError("a dataset needs at least 2 rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise SchemaError("dataset values must be finite")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "_columns", {n: X[:, k].copy() for k, n in enumerate(self.names)})

    @classmethod
    def from_columns(cls, columns: dict, y, target_name: str = "y") -> Dataset:
        names = tuple(columns)
        X = np.column_stack([np.asarray(columns[n], dtype=float) for n in names]) if names else np.empty((len(y), 0))
        return cls(names, X, y, target_name)

    @property
    def columns(self) -> dict[str, np.ndarray]:
        return self._columns

    @property
    def n_rows(self) -> int:
        return self.y.shape[0]


def load_dataset(path) -> Dataset:
    """Read a CSV whose last column is the dependent variable."""
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot open ({exc.strerror})") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 1 or any(not h for h in header):
            raise DatasetError(f"{path}: header row has blank column names")
        if len(set(header)) != len(header):
            raise DatasetError(f"{path}: duplicate column names in header")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(f"{path}: row {line_no}, column {col!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(value):
                    raise DatasetError(f"{path}: row {line_no}, column {col!r}: non-finite value {cell!r}")
                values.append(value)
            rows.append(values)
    if len(rows) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, found {len(rows)}")
    table = np.array(rows, dtype=float)
    return Dataset(tuple(header[:-1]), table[:, :-1], table[:, -1], header[-1])


def write_dataset(data: Dataset, path) -> None:
    """Write ``data`` in the CSV contract; floats are written with repr so they round-trip exactly."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([*data.names, data.target_name])
        for xrow, yv in zip(data.X, data.y):
            writer.writerow([repr(float(v)) for v in xrow] + [repr(float(yv))])
