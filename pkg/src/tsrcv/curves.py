"""Time-series learning curves: rCV errors traced over the fold count k.

The series is never subsampled. A larger k removes fewer points per fold,
which plays the role of a larger training sample.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import RcvConfig, _check_pair, run_rcv
from .errors import InvalidConfig, InvalidFoldCount, ParseError, RcvError, with_context
from .series import TimeSeries, fmt

METRICS = ("g_r", "g_p", "g_rcv")
CURVE_HEADER = (
    "k", "replicates",
    "g_r_mean", "g_r_sd", "g_p_mean", "g_p_sd", "g_rcv_mean", "g_rcv_sd",
)
CURVE_NOTE = (
    "g_rcv_mean is the mean over replicates of per-run g_r * g_p, "
    "not the product of g_r_mean and g_p_mean"
)


def derive_seed(base_seed: int, k: int, replicate: int) -> int:
    """Seed for one (k, replicate) cell, hashed from the base seed via SeedSequence."""
    ss = np.random.SeedSequence([int(base_seed), int(k), int(replicate)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepConfig:
    k_values: tuple = tuple(range(2, 21))
    replicates: int = 5
    base: RcvConfig = field(default_factory=RcvConfig)
    metrics: tuple = METRICS

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        object.__setattr__(self, "k_values", ks)
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not ks:
            raise InvalidConfig("k_values is empty")
        if len(set(ks)) != len(ks):
            raise InvalidConfig(f"k_values must be distinct, got {ks}")
        if min(ks) < 2:
            raise InvalidFoldCount(f"every k must be >= 2, got {ks}")
        if self.replicates < 1:
            raise InvalidConfig(f"replicates must be >= 1, got {self.replicates}")
        unknown = set(self.metrics) - set(METRICS)
        if unknown or not self.metrics:
            raise InvalidConfig(f"metrics must be a nonempty subset of {METRICS}")


@dataclass(frozen=True)
class CurvePoint:
    """Replicate summary at one fold count.

    ``*_sd`` is the sample standard deviation (ddof=1), 0.0 for a single
    replicate. Metrics excluded by the sweep are ``None``.
    """

    k: int
    replicates: int
    g_r_mean: float | None
    g_r_sd: float | None
    g_p_mean: float | None
    g_p_sd: float | None
    g_rcv_mean: float | None
    g_rcv_sd: float | None
    seeds: tuple = ()
    runs: tuple = ()  # (g_r, g_p, g_rcv) per replicate

    def row(self):
        return tuple(getattr(self, name) for name in CURVE_HEADER)


@dataclass(frozen=True)
class LearningCurve:
    points: tuple

    def __post_init__(self):
        ks = [p.k for p in self.points]
        if len(set(ks)) != len(ks):
            raise InvalidConfig(f"duplicate k in learning curve: {ks}")

    def ks(self):
        return [p.k for p in self.points]

    def metric(self, name):
        return [getattr(p, f"{name}_mean") for p in self.points]


def _summarise(values):
    mean = math.fsum(values) / len(values)
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, sd


def sweep(train: TimeSeries, oos: TimeSeries, cfg: SweepConfig, threads: int = 1) -> LearningCurve:
    """Repeat rCV over ``cfg.k_values`` x ``cfg.replicates`` and summarise.

    Cell ``(k, r)`` runs with ``derive_seed(cfg.base.seed, k, r)``, so the
    whole curve is fixed by the base seed, the k values and the replicate
    count. Cells may run on ``threads`` workers; the result does not change.
    """
    _check_pair(train, oos)
    too_big = [k for k in cfg.k_values if k > len(train)]
    if too_big:
        raise InvalidFoldCount(f"k values {too_big} exceed the series length {len(train)}")
    cells = [(k, r) for k in sorted(cfg.k_values) for r in range(cfg.replicates)]

    def one_cell(cell):
        k, r = cell
        seed = derive_seed(cfg.base.seed, k, r)
        try:
            report = run_rcv(train, oos, replace(cfg.base, k=k, seed=seed))
        except RcvError as exc:
            raise with_context(exc, f"k={k}, replicate {r + 1}") from exc
        return seed, (report.g_r, report.g_p, report.g_rcv)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_cell, cells))
    else:
        results = [one_cell(c) for c in cells]

    points = []
    for i, k in enumerate(sorted(cfg.k_values)):
        chunk = results[i * cfg.replicates:(i + 1) * cfg.replicates]
        runs = tuple(triple for _, triple in chunk)
        stats = {}
        for j, name in enumerate(METRICS):
            if name in cfg.metrics:
                stats[f"{name}_mean"], stats[f"{name}_sd"] = _summarise([t[j] for t in runs])
            else:
                stats[f"{name}_mean"] = stats[f"{name}_sd"] = None
        points.append(
            CurvePoint(k=k, replicates=cfg.replicates, seeds=tuple(s for s, _ in chunk),
                       runs=runs, **stats)
        )
    return LearningCurve(tuple(points))


def curve_csv(curve: LearningCurve) -> str:
    lines = [",".join(CURVE_HEADER)]
    for p in curve.points:
        cells = []
        for v in p.row():
            if v is None:
                cells.append("")
            elif isinstance(v, int):
                cells.append(str(v))
            else:
                cells.append(fmt(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_curve(curve: LearningCurve, path) -> Path:
    if not curve.points:
        raise InvalidConfig("cannot emit an empty learning curve")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(curve_csv(curve))
    return path


def read_curve(path) -> LearningCurve:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CURVE_HEADER:
        raise ParseError(f"expected header {','.join(CURVE_HEADER)!r}", path, 1)
    points = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CURVE_HEADER):
            raise ParseError(f"expected {len(CURVE_HEADER)} fields, got {len(row)}", path, lineno)
        try:
            k, reps = int(row[0]), int(row[1])
            floats = [float(c) if c != "" else None for c in row[2:]]
        except ValueError:
            raise ParseError(f"malformed row {','.join(row)!r}", path, lineno)
        points.append(CurvePoint(k, reps, *floats))
    return LearningCurve(tuple(points))
