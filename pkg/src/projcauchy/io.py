"""Dataset ingestion and CSV writers for the command-line tools."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-6


class DatasetError(ValueError):
    """Malformed or inconsistent input file."""


@dataclass(frozen=True)
class Dataset:
    kind: str  # "angles", "unit2" or "unit3"
    values: np.ndarray
    covariates: np.ndarray | None = None
    covariate_names: tuple = ()
    source: str = ""
    degrees: bool = False

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def domain(self) -> str:
        return "sphere" if self.kind == "unit3" else "circle"

    def angles(self) -> np.ndarray:
        """Responses as angles in radians (circular datasets only)."""
        if self.kind == "angles":
            return self.values
        if self.kind == "unit2":
            return np.arctan2(self.values[:, 1], self.values[:, 0])
        raise DatasetError("spherical data has no angle representation")

    def unit_vectors(self) -> np.ndarray:
        if self.kind == "angles":
            return np.column_stack([np.cos(self.values), np.sin(self.values)])
        return self.values


def _float(s, line, col):
    try:
        v = float(s)
    except (TypeError, ValueError):
        raise DatasetError(f"line {line}: column {col!r} is not a number: {s!r}") from None
    if not np.isfinite(v):
        raise DatasetError(f"line {line}: column {col!r} is not finite")
    return v


def parse_text(text: str, degrees: bool = False, source: str = "<string>") -> Dataset:
    """Parse CSV text with a header row.

    Responses come from a ``theta`` column (radians unless ``degrees``) or
    from ``y1,y2`` / ``y1,y2,y3`` unit-vector columns. Columns prefixed ``x_``
    are covariates; other columns are ignored. Vectors within ``1e-6`` of unit
    norm are renormalized, others are rejected.
    """
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        if row and any(c.strip() for c in row):
            header = [c.strip() for c in row]
            break
    if header is None:
        raise DatasetError(f"{source}: empty file")
    if len(set(header)) != len(header):
        raise DatasetError(f"{source}: duplicate column names")
    if "theta" in header:
        kind, ycols = "angles", ["theta"]
    elif {"y1", "y2", "y3"} <= set(header):
        kind, ycols = "unit3", ["y1", "y2", "y3"]
    elif {"y1", "y2"} <= set(header):
        kind, ycols = "unit2", ["y1", "y2"]
    else:
        raise DatasetError(f"{source}: header needs a 'theta' column or y1,y2(,y3) columns")
    xcols = [c for c in header if c.startswith("x_")]
    yidx = [header.index(c) for c in ycols]
    xidx = [header.index(c) for c in xcols]

    ys, xs, lines = [], [], []
    for row in reader:
        line = reader.line_num
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetError(f"line {line}: expected {len(header)} fields, found {len(row)}")
        ys.append([_float(row[i], line, header[i]) for i in yidx])
        xs.append([_float(row[i], line, header[i]) for i in xidx])
        lines.append(line)
    if not ys:
        raise DatasetError(f"{source}: no data rows")

    y = np.array(ys, dtype=float)
    if kind == "angles":
        y = y[:, 0]
        if degrees:
            y = np.deg2rad(y)
    else:
        norms = np.linalg.norm(y, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            i = int(bad[0])
            raise DatasetError(
                f"row {i} (line {lines[i]}): response norm {norms[i]:.6g} is not 1 within {NORM_TOL:g}"
            )
        y = y / norms[:, None]
    X = np.array(xs, dtype=float) if xcols else None
    return Dataset(kind, y, X, tuple(xcols), source, degrees)


def parse_dataset(path, degrees: bool = False) -> Dataset:
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as e:
        raise DatasetError(f"{path}: {e.strerror}") from None
    return parse_text(text, degrees=degrees, source=str(path))


def write_csv(rows, header, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
