"""Right-censored survival data: container, CSV ingestion and standardization."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Invalid survival data (bad values, missing columns, degenerate columns)."""


class CsvParseError(DataError):
    """A CSV cell or header could not be accepted.

    ``row`` is the 1-based data row (header excluded), ``None`` for header
    problems; ``column`` is the offending column name.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateColumnError(DataError):
    def __init__(self, column):
        super().__init__(f"degenerate column {column!r}: zero sample standard deviation")
        self.column = column


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """``n`` observations of (covariates X, observed time Z, event indicator Δ).

    Δ = 1 marks an observed event, 0 a censored time.  Arrays are copied and
    made read-only on construction.
    """

    covariates: np.ndarray
    times: np.ndarray
    events: np.ndarray
    names: tuple = field(default=None)

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise DataError("covariates must be an n x p matrix")
        t = np.asarray(self.times, dtype=np.float64).ravel()
        e = np.asarray(self.events, dtype=np.float64).ravel()
        n, p = x.shape
        if t.shape[0] != n or e.shape[0] != n:
            raise DataError(f"length mismatch: covariates {n}, times {t.shape[0]}, events {e.shape[0]}")
        if n < 1 or p < 1:
            raise DataError("need n >= 1 and p >= 1")
        if not np.all(np.isfinite(x)):
            raise DataError("covariates must be finite")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise DataError("times must be finite and strictly positive")
        if not np.all((e == 0) | (e == 1)):
            raise DataError("events must be 0 (censored) or 1 (event)")
        names = self.names
        if names is None:
            names = tuple(f"x{k + 1}" for k in range(p))
        if len(names) != p:
            raise DataError("one name per covariate column required")
        object.__setattr__(self, "covariates", _readonly(x))
        object.__setattr__(self, "times", _readonly(t))
        object.__setattr__(self, "events", _readonly(e))
        object.__setattr__(self, "names", tuple(names))

    @property
    def n(self):
        return self.covariates.shape[0]

    @property
    def p(self):
        return self.covariates.shape[1]

    @property
    def n_events(self):
        return int(self.events.sum())

    def subset(self, rows):
        rows = np.asarray(rows)
        return SurvivalDataset(self.covariates[rows], self.times[rows], self.events[rows], self.names)


@dataclass(frozen=True, eq=False)
class Standardization:
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=np.float64)
        if np.any(scales <= 0):
            raise DataError("standardization scales must be positive")
        object.__setattr__(self, "means", _readonly(self.means))
        object.__setattr__(self, "scales", _readonly(scales))

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.means) / self.scales

    def invert(self, xs):
        return np.asarray(xs, dtype=np.float64) * self.scales + self.means


def standardize(data):
    """Center each covariate column and scale it to unit sample sd (ddof=1).

    Returns the transformed dataset and the :class:`Standardization` that
    undoes it.  Raises :class:`DegenerateColumnError` on a constant column.
    """
    x = data.covariates
    if data.n < 2:
        raise DataError("standardization needs at least two observations")
    means = x.mean(axis=0)
    scales = x.std(axis=0, ddof=1)
    for k in range(data.p):
        if not scales[k] > 0 or scales[k] <= 1e-14 * max(1.0, abs(means[k])):
            raise DegenerateColumnError(data.names[k])
    st = Standardization(means, scales)
    return SurvivalDataset(st.apply(x), data.times, data.events, data.names), st


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise CsvParseError(f"non-numeric value {text!r}, row {row}, column {column}", row, column) from None
    if not math.isfinite(value):
        raise CsvParseError(f"non-finite value {text!r}, row {row}, column {column}", row, column)
    return value


def load_csv(path, time_col="time", status_col="status", covariate_cols=None):
    """Read a CSV with header ``x1,...,xp,time,status``.

    Covariate columns default to every column other than the time and status
    columns, in file order.  Row order is preserved.  Every rejected cell
    raises :class:`CsvParseError` naming the 1-based data row and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError("empty file: missing header") from None
        for col in (time_col, status_col):
            if col not in header:
                raise CsvParseError(f"missing column {col!r}", None, col)
        if covariate_cols is None:
            covariate_cols = [h for h in header if h not in (time_col, status_col)]
        for col in covariate_cols:
            if col not in header:
                raise CsvParseError(f"missing column {col!r}", None, col)
        if not covariate_cols:
            raise CsvParseError("no covariate columns", None, None)
        pos = {h: i for i, h in enumerate(header)}
        xs, ts, ds = [], [], []
        for row, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise CsvParseError(f"expected {len(header)} cells, got {len(cells)}, row {row}", row, None)
            xs.append([_parse_float(cells[pos[c]].strip(), row, c) for c in covariate_cols])
            t = _parse_float(cells[pos[time_col]].strip(), row, time_col)
            if t <= 0:
                raise CsvParseError(f"nonpositive time, row {row}", row, time_col)
            s = _parse_float(cells[pos[status_col]].strip(), row, status_col)
            if s not in (0.0, 1.0):
                raise CsvParseError(f"status outside {{0,1}}, row {row}", row, status_col)
            ts.append(t)
            ds.append(s)
    if len(ts) < 2:
        raise CsvParseError("need at least two data rows")
    return SurvivalDataset(np.array(xs), np.array(ts), np.array(ds), tuple(covariate_cols))


def write_csv(data, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.names) + ["time", "status"])
        for i in range(data.n):
            w.writerow([repr(float(v)) for v in data.covariates[i]]
                       + [repr(float(data.times[i])), int(data.events[i])])
