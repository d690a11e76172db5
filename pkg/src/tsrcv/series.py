"""Ordered time series, fold partitions and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptySeries,
    InvalidSpacing,
    LengthMismatch,
    NonMonotonicTimes,
    ParseError,
    ValidationError,
)

SERIES_HEADER = ("t", "y")


def fmt(x: float) -> str:
    """Format a float at 17 significant digits (lossless for IEEE doubles)."""
    return format(float(x), ".17g")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered ``(t, y)`` pairs with strictly increasing times.

    Arrays are copied on construction and marked read-only, so an instance
    can be shared between concurrent fold evaluations.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        values = _frozen(self.values)
        if times.size != values.size:
            raise LengthMismatch(
                f"times has {times.size} entries but values has {values.size}"
            )
        if times.size == 0:
            raise EmptySeries("a time series needs at least one point")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("times and values must be finite")
        bad = np.flatnonzero(np.diff(times) <= 0)
        if bad.size:
            i = int(bad[0])
            raise NonMonotonicTimes(
                f"times must be strictly increasing; t[{i + 1}]={times[i]!r} "
                f"is followed by t[{i + 2}]={times[i + 1]!r}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls) -> "TimeSeries":
        """A zero-length series, used for an absent out-of-sample segment."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "times", _frozen([]))
        object.__setattr__(obj, "values", _frozen([]))
        return obj

    def __len__(self):
        return int(self.times.size)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.times, values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(SERIES_HEADER) + "\n")
        for t, y in zip(self.times, self.values):
            buf.write(f"{fmt(t)},{fmt(y)}\n")
        return buf.getvalue()


def new_time_series(times, values) -> TimeSeries:
    """Validate and build a :class:`TimeSeries`."""
    return TimeSeries(times, values)


def split_regular_grid(n: int, dt: float, t0: float = 0.0) -> np.ndarray:
    """Return ``[t0, t0 + dt, ..., t0 + (n - 1) dt]``.

    Each point is computed as ``t0 + i * dt`` rather than by accumulation,
    so long grids do not drift.
    """
    if not dt > 0:
        raise InvalidSpacing(f"grid spacing must be positive, got {dt!r}")
    if n < 1:
        raise ValidationError(f"grid needs at least one point, got n={n}")
    return t0 + np.arange(n, dtype=np.float64) * float(dt)


def write_series_csv(series: TimeSeries, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(series.to_csv())
    return path


def read_series_csv(path, allow_empty: bool = False) -> TimeSeries:
    """Parse a two-column ``t,y`` CSV.

    Malformed rows raise :class:`ParseError` carrying the 1-based line number.
    A header-only file yields ``TimeSeries.empty()`` when ``allow_empty``.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("file is empty; expected header 't,y'", path, 1)
    header = tuple(c.strip() for c in rows[0])
    if header != SERIES_HEADER:
        raise ParseError(f"expected header 't,y', got {','.join(rows[0])!r}", path, 1)
    times, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path, lineno)
        try:
            times.append(float(row[0]))
            values.append(float(row[1]))
        except ValueError:
            raise ParseError(f"non-numeric field in {','.join(row)!r}", path, lineno)
    if not times:
        if allow_empty:
            return TimeSeries.empty()
        raise ParseError("no data rows", path, 2)
    try:
        return TimeSeries(times, values)
    except ValidationError as exc:
        raise ParseError(str(exc), path)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Partition of ``range(n)`` into ``k`` disjoint, near-equal index sets.

    ``assignment`` holds 0-based sorted index arrays. Everything written to
    disk uses 1-based indices.
    """

    n: int
    k: int
    assignment: tuple

    def __post_init__(self):
        folds = tuple(_frozen_index(f) for f in self.assignment)
        object.__setattr__(self, "assignment", folds)
        if not 2 <= self.k <= self.n:
            raise ValidationError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")
        if len(folds) != self.k:
            raise ValidationError(f"expected {self.k} folds, got {len(folds)}")
        sizes = [f.size for f in folds]
        if max(sizes) - min(sizes) > 1:
            raise ValidationError(f"fold sizes differ by more than one: {sizes}")
        merged = np.sort(np.concatenate(folds))
        if not np.array_equal(merged, np.arange(self.n)):
            raise ValidationError("folds must be disjoint and cover every index")

    def sizes(self) -> list[int]:
        return [int(f.size) for f in self.assignment]

    def removed(self, fold_id: int) -> np.ndarray:
        """0-based indices held out by fold ``fold_id`` (1-based id)."""
        return self.assignment[self._check(fold_id)]

    def retained(self, fold_id: int) -> np.ndarray:
        """0-based indices of the training-fold union (all other folds)."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.removed(fold_id)] = False
        return np.flatnonzero(mask)

    def _check(self, fold_id):
        if not 1 <= fold_id <= self.k:
            raise ValidationError(f"fold_id must be in 1..{self.k}, got {fold_id}")
        return fold_id - 1


def _frozen_index(a) -> np.ndarray:
    arr = np.sort(np.asarray(a, dtype=np.int64).reshape(-1))
    arr.flags.writeable = False
    return arr
