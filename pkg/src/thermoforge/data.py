"""Dataset ingestion, splitting, scaling and correlation statistics.

Conventions
-----------
* Standard deviations use the population form (divide by ``n``) everywhere.
* ``Tool Geometry`` is encoded as ordinal category codes in order of first
  appearance in the file.
* Datasets are immutable: arrays are marked read-only and every transform
  returns a new :class:`Dataset`.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyInputError, InvalidParameterError, ParseError, SchemaError
from .rng import stream

log = logging.getLogger(__name__)

RR = "Rotational Rate (RPM)"
TS = "Travel Speed (mm/min)"
TOOL_GEOMETRY = "Tool Geometry"
DMFR = "Deposition Material Flow Rate (mm^3/min)"
TOOL_DIAMETER = "Tool Diameter (mm)"
POWDER_SIZE = "Powder Size (micro meter)"
PEAK_TEMPERATURE = "Peak temperature (degree Celsius)"
DEPOSITION_QUALITY = "Deposition Quality"

FEATURE_COLUMNS = (RR, TS, TOOL_GEOMETRY, DMFR, TOOL_DIAMETER, POWDER_SIZE)
TARGET_COLUMNS = (PEAK_TEMPERATURE, DEPOSITION_QUALITY)
CSV_COLUMNS = FEATURE_COLUMNS + TARGET_COLUMNS
CATEGORICAL_COLUMNS = frozenset({TOOL_GEOMETRY})

UNITS = {
    RR: "RPM",
    TS: "mm/min",
    TOOL_GEOMETRY: "category",
    DMFR: "mm^3/min",
    TOOL_DIAMETER: "mm",
    POWDER_SIZE: "micro meter",
    PEAK_TEMPERATURE: "degree Celsius",
    DEPOSITION_QUALITY: "label",
}

# Default feature subsets per task.
REGRESSION_FEATURES = (RR, TS, DMFR)
CLASSIFICATION_FEATURES = (RR, TS, TOOL_GEOMETRY, DMFR, POWDER_SIZE)

# Short names used in file names and plot labels.
SHORT_NAMES = {
    RR: "RR",
    TS: "TS",
    TOOL_GEOMETRY: "Geometry",
    DMFR: "DMFR",
    TOOL_DIAMETER: "Diameter",
    POWDER_SIZE: "Powder",
    PEAK_TEMPERATURE: "PT",
    DEPOSITION_QUALITY: "Quality",
}


def _frozen(a):
    a = np.array(a, dtype=float) if not isinstance(a, np.ndarray) else a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Named feature columns plus the temperature and quality targets.

    Either target may be ``None`` when the source did not provide it.
    """

    feature_names: tuple
    X: np.ndarray
    units: tuple
    target_temperature: np.ndarray | None = None
    target_quality: np.ndarray | None = None
    categorical_mask: tuple = ()
    categories: dict = field(default_factory=dict)
    log: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        n, p = X.shape
        if len(self.feature_names) != p:
            raise DataError("feature_names length does not match feature matrix")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains non-finite values")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "X", _frozen(X))
        units = tuple(self.units) if self.units else tuple(UNITS.get(c, "") for c in self.feature_names)
        object.__setattr__(self, "units", units)
        mask = tuple(self.categorical_mask) if self.categorical_mask else tuple(
            c in CATEGORICAL_COLUMNS for c in self.feature_names
        )
        object.__setattr__(self, "categorical_mask", mask)
        if self.target_temperature is not None:
            t = np.asarray(self.target_temperature, dtype=float)
            if t.shape != (n,):
                raise DataError("temperature target length mismatch")
            if not np.all(np.isfinite(t)):
                raise DataError("temperature target contains non-finite values")
            object.__setattr__(self, "target_temperature", _frozen(t))
        if self.target_quality is not None:
            q = np.asarray(self.target_quality)
            if q.shape != (n,):
                raise DataError("quality target length mismatch")
            if not np.all((q == 0) | (q == 1)):
                raise DataError("deposition quality labels must be 0 or 1")
            q = q.astype(np.int64)
            q.setflags(write=False)
            object.__setattr__(self, "target_quality", q)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name == PEAK_TEMPERATURE and self.target_temperature is not None:
            return self.target_temperature
        if name == DEPOSITION_QUALITY and self.target_quality is not None:
            return self.target_quality.astype(float)
        try:
            return self.X[:, self.feature_names.index(name)]
        except ValueError:
            raise DataError(f"unknown column {name!r}") from None

    def select(self, names: Sequence[str]) -> "Dataset":
        """Keep only the named feature columns, in the given order."""
        idx = []
        for name in names:
            if name not in self.feature_names:
                raise DataError(f"unknown column {name!r}")
            idx.append(self.feature_names.index(name))
        return replace(
            self,
            feature_names=tuple(names),
            X=self.X[:, idx],
            units=tuple(self.units[i] for i in idx),
            categorical_mask=tuple(self.categorical_mask[i] for i in idx),
        )

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            X=self.X[rows],
            target_temperature=None if self.target_temperature is None else self.target_temperature[rows],
            target_quality=None if self.target_quality is None else self.target_quality[rows],
        )


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(row, column, text) from None
    if not math.isfinite(value):
        raise ParseError(row, column, text)
    return value


def load_csv(path, schema: Sequence[str] = CSV_COLUMNS) -> Dataset:
    """Read an AFSD-style CSV file.

    Columns are matched by exact header name; extra columns are ignored.
    Target columns listed in ``schema`` become the dataset targets, the
    remaining schema columns become features (in schema order).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: empty file") from None
        rows, lines_of = [], []
        for r in reader:
            if any(cell.strip() for cell in r):
                rows.append(r)
                lines_of.append(reader.line_num)  # header is line 1
    header = [h.strip() for h in header]
    for col in schema:
        if col not in header:
            raise SchemaError(col)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")

    position = {name: header.index(name) for name in schema}
    feature_names = [c for c in schema if c not in TARGET_COLUMNS]
    columns: dict = {}
    categories: dict = {}
    for col in schema:
        j = position[col]
        raw = []
        for i, r in zip(lines_of, rows):
            if j >= len(r):
                raise ParseError(i, col, "")
            raw.append(r[j].strip())
        if col in CATEGORICAL_COLUMNS:
            codes = {}
            values = []
            for text in raw:
                values.append(codes.setdefault(text, len(codes)))
            categories[col] = tuple(codes)
            columns[col] = np.array(values, dtype=float)
        elif col == DEPOSITION_QUALITY:
            vals = []
            for i, text in zip(lines_of, raw):
                v = _parse_float(text, i, col)
                if v not in (0.0, 1.0):
                    raise DataError(f"row {i}, column {col!r}: label {text!r} is not 0 or 1")
                vals.append(int(v))
            columns[col] = np.array(vals, dtype=np.int64)
        else:
            columns[col] = np.array([_parse_float(t, i, col) for i, t in zip(lines_of, raw)])

    n = len(rows)
    lines = [f"read {path.name}: {n} rows, {len(schema)} columns"]
    for col in schema:
        v = columns[col]
        lines.append(f"{col}: min={float(np.min(v)):.6g} max={float(np.max(v)):.6g}")
    for col, cats in categories.items():
        lines.append(f"{col}: ordinal codes " + ", ".join(f"{c!r}->{k}" for k, c in enumerate(cats)))
    for line in lines:
        log.info(line)

    X = np.column_stack([columns[c] for c in feature_names]) if feature_names else np.empty((n, 0))
    return Dataset(
        feature_names=tuple(feature_names),
        X=X,
        units=tuple(UNITS.get(c, "") for c in feature_names),
        target_temperature=columns.get(PEAK_TEMPERATURE),
        target_quality=columns.get(DEPOSITION_QUALITY),
        categories=categories,
        log=tuple(lines),
    )


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset back out using the canonical header names."""
    cols = list(ds.feature_names)
    data = [ds.X[:, j] for j in range(len(cols))]
    if ds.target_temperature is not None:
        cols.append(PEAK_TEMPERATURE)
        data.append(ds.target_temperature)
    if ds.target_quality is not None:
        cols.append(DEPOSITION_QUALITY)
        data.append(ds.target_quality)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(ds.n_samples):
            row = []
            for name, col in zip(cols, data):
                if name in ds.categories:
                    row.append(ds.categories[name][int(col[i])])
                elif name == DEPOSITION_QUALITY:
                    row.append(str(int(col[i])))
                else:
                    row.append(repr(float(col[i])))
            w.writerow(row)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidParameterError("train_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_indices(n: int, spec: SplitSpec):
    n_train = _round_half_up(spec.train_fraction * n)
    if n < 2 or n_train <= 0 or n_train >= n:
        raise InvalidParameterError(
            f"train fraction {spec.train_fraction} on {n} rows gives an empty partition"
        )
    perm = stream(spec.seed, "split").permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def train_test_split(ds: Dataset, spec: SplitSpec):
    """Seeded random split; train size is ``round(train_fraction * n)``."""
    train_idx, test_idx = split_indices(ds.n_samples, spec)
    return ds.take(train_idx), ds.take(test_idx)


@dataclass(frozen=True)
class ScalerParams:
    columns: tuple
    mean: np.ndarray
    std: np.ndarray

    @property
    def zero_variance(self) -> tuple:
        return tuple(bool(s == 0.0) for s in self.std)

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / safe
        return np.where(self.std > 0, Z, 0.0)

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) * self.std + self.mean


def fit_array_scaler(X, columns=None) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit a scaler on zero rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns can pick up rounding noise in the mean
    std = np.where(np.all(X == X[:1], axis=0), 0.0, std)
    cols = tuple(columns) if columns is not None else tuple(range(X.shape[1]))
    return ScalerParams(cols, _frozen(mean), _frozen(std))


def fit_scaler(ds: Dataset, columns=None) -> ScalerParams:
    columns = tuple(ds.feature_names if columns is None else columns)
    for c in columns:
        if c not in ds.feature_names:
            raise DataError(f"unknown column {c!r}")
    X = np.column_stack([ds.column(c) for c in columns])
    params = fit_array_scaler(X, columns)
    for c, flag in zip(columns, params.zero_variance):
        if flag:
            log.warning("column %r has zero variance; scaled to zeros", c)
    return params


def apply_scaler(ds: Dataset, params: ScalerParams) -> Dataset:
    X = ds.X.copy()
    for j, c in enumerate(params.columns):
        if c not in ds.feature_names:
            raise DataError(f"unknown column {c!r}")
        k = ds.feature_names.index(c)
        s = params.std[j]
        X[:, k] = 0.0 if s == 0 else (X[:, k] - params.mean[j]) / s
    return replace(ds, X=X)


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple
    values: np.ndarray
    constant_columns: tuple = ()


def pearson_matrix(M, labels=None) -> CorrelationMatrix:
    """Pearson correlation of the columns of ``M``.

    Constant columns get correlation 0 with every other column (1 on the
    diagonal) and are listed in ``constant_columns``.
    """
    M = np.asarray(M, dtype=float)
    n, p = M.shape
    if n < 2:
        raise DataError("correlation needs at least 2 samples")
    labels = tuple(labels) if labels is not None else tuple(range(p))
    C = M - M.mean(axis=0)
    norms = np.sqrt((C * C).sum(axis=0))
    const = norms == 0
    safe = np.where(const, 1.0, norms)
    R = (C.T @ C) / np.outer(safe, safe)
    R[const, :] = 0.0
    R[:, const] = 0.0
    R = np.clip((R + R.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    flagged = tuple(labels[j] for j in np.flatnonzero(const))
    if flagged:
        log.warning("constant columns in correlation: %s", ", ".join(map(str, flagged)))
    return CorrelationMatrix(labels, _frozen(R), flagged)


def pearson_correlation_matrix(ds: Dataset) -> CorrelationMatrix:
    """Correlation of all features plus whichever targets are present."""
    cols = [ds.X[:, j] for j in range(ds.X.shape[1])]
    labels = list(ds.feature_names)
    if ds.target_temperature is not None:
        cols.append(ds.target_temperature)
        labels.append(PEAK_TEMPERATURE)
    if ds.target_quality is not None:
        cols.append(ds.target_quality.astype(float))
        labels.append(DEPOSITION_QUALITY)
    return pearson_matrix(np.column_stack(cols), labels)
