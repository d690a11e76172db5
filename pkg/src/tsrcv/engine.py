"""Reconstructive cross-validation (rCV) for a single fold count.

Each of the ``k`` folds is removed in turn and refilled by kernel
regression on the remaining points (the secondary model). The refilled,
full-length series then trains the forecaster (the primary model), which
predicts the out-of-sample segment. Reconstruction and prediction errors
are averaged over folds and multiplied into the rCV error.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    DenominatorUnderflowWarning,
    EmptySeries,
    InvalidConfig,
    InvalidFoldCount,
    LengthMismatch,
    RcvError,
    TimeOrderViolation,
    with_context,
)
from .linalg import KernelConfig, KernelSolver
from .ou import check_seed, make_rng
from .series import FoldPlan, TimeSeries, fmt

GP_FORMS = ("mape", "signed")
RESIDUALS_HEADER = "fold_id,index,t,y,y_hat,abs_err"


@dataclass(frozen=True)
class RcvConfig:
    """Settings for one rCV run.

    ``gp_form`` selects how the out-of-sample error is measured: ``"mape"``
    (default, same form as the reconstruction error) or ``"signed"``, the
    plain mean of ``w - w_hat`` with no normalisation.
    """

    k: int = 10
    kernel: KernelConfig = field(default_factory=KernelConfig)
    mape_epsilon: float = 1e-8
    seed: int = 0
    gp_form: str = "mape"

    def __post_init__(self):
        if self.k < 2:
            raise InvalidFoldCount(f"k must be >= 2, got {self.k}")
        if not self.mape_epsilon >= 0:
            raise InvalidConfig(f"mape_epsilon must be >= 0, got {self.mape_epsilon}")
        if self.gp_form not in GP_FORMS:
            raise InvalidConfig(f"gp_form must be one of {GP_FORMS}, got {self.gp_form!r}")
        check_seed(self.seed)


def assign_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Deal a seeded random permutation of ``range(n)`` round-robin into k folds."""
    if not 2 <= k <= n:
        raise InvalidFoldCount(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = make_rng(seed).permutation(n)
    return FoldPlan(n, k, tuple(perm[m::k] for m in range(k)))


def reconstruct_fold(
    train: TimeSeries, plan: FoldPlan, fold_id: int, cfg: RcvConfig
) -> TimeSeries:
    """Full-length series with fold ``fold_id`` (1-based) refilled by regression.

    Retained points are copied verbatim, so they are bit-identical to the
    input whatever the ridge.
    """
    if len(train) != plan.n:
        raise LengthMismatch(f"plan covers {plan.n} points but series has {len(train)}")
    removed = plan.removed(fold_id)
    kept = plan.retained(fold_id)
    solver = KernelSolver.build(train.times[kept], cfg.kernel)
    values = np.array(train.values)
    values[removed] = solver.predict(train.values[kept], train.times[removed])
    return train.with_values(values)


def _mape(actual, predicted, eps):
    """Mean of ``|a - p| / max(|a|, eps)``; returns (value, n_guarded)."""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.size == 0:
        raise EmptySeries("cannot compute a MAPE over zero points")
    denom = np.abs(actual)
    guarded = denom < eps
    ratios = np.abs(actual - predicted) / np.where(guarded, eps, denom)
    return math.fsum(ratios) / ratios.size, int(guarded.sum())


def _signed_mean(actual, predicted):
    diff = np.asarray(actual, dtype=np.float64) - np.asarray(predicted, dtype=np.float64)
    if diff.size == 0:
        raise EmptySeries("cannot average over zero points")
    return math.fsum(diff) / diff.size


def _fold_mean(values):
    return math.fsum(values) / len(values)


def _warn_underflow(count, what):
    if count:
        warnings.warn(
            f"{count} {what} denominators below mape_epsilon were clamped",
            DenominatorUnderflowWarning,
            stacklevel=3,
        )


def reconstruction_error(
    original: TimeSeries, reconstructions, plan: FoldPlan, cfg: RcvConfig
) -> float:
    """Fold-averaged MAPE of the reconstructions on their removed points."""
    if len(reconstructions) != plan.k:
        raise LengthMismatch(f"expected {plan.k} reconstructions, got {len(reconstructions)}")
    per_fold, guarded = [], 0
    for m, rec in enumerate(reconstructions, start=1):
        idx = plan.removed(m)
        value, g = _mape(original.values[idx], rec.values[idx], cfg.mape_epsilon)
        per_fold.append(value)
        guarded += g
    _warn_underflow(guarded, "reconstruction")
    return _fold_mean(per_fold)


def predict_oos(
    reconstruction: TimeSeries, oos_times, cfg: RcvConfig, solver: KernelSolver | None = None
) -> np.ndarray:
    """Forecast ``oos_times`` from a full reconstructed training series.

    Every query must lie strictly after the last training time. ``solver``
    may carry a factorization of the reconstruction's grid built once and
    reused across folds.
    """
    query = np.asarray(oos_times, dtype=np.float64).reshape(-1)
    if query.size == 0:
        return np.empty(0)
    last = reconstruction.times[-1]
    early = np.flatnonzero(~(query > last))
    if early.size:
        i = int(early[0])
        raise TimeOrderViolation(
            f"out-of-sample time {query[i]!r} (position {i + 1}) is not after "
            f"the last training time {last!r}"
        )
    if solver is None:
        solver = KernelSolver.build(reconstruction.times, cfg.kernel)
    return solver.predict(reconstruction.values, query)


def _prediction_fold_error(w, w_hat, cfg):
    if len(w_hat) != len(w):
        raise LengthMismatch(f"prediction has {len(w_hat)} points, oos has {len(w)}")
    if cfg.gp_form == "signed":
        return _signed_mean(w, w_hat), 0
    return _mape(w, w_hat, cfg.mape_epsilon)


def prediction_error(oos: TimeSeries, predictions, cfg: RcvConfig) -> float:
    """Fold-averaged out-of-sample error (MAPE, or signed mean per ``gp_form``)."""
    if len(predictions) == 0:
        raise LengthMismatch("need at least one prediction vector")
    per_fold, guarded = [], 0
    for w_hat in predictions:
        value, g = _prediction_fold_error(oos.values, w_hat, cfg)
        per_fold.append(value)
        guarded += g
    _warn_underflow(guarded, "prediction")
    return _fold_mean(per_fold)


def rcv_error(g_r: float, g_p: float) -> float:
    return g_r * g_p


@dataclass(frozen=True, eq=False)
class FoldResult:
    fold_id: int
    removed_indices: np.ndarray  # 0-based
    reconstructed_values: np.ndarray  # at removed_indices
    oos_predictions: np.ndarray
    reconstruction_mape: float
    prediction_error: float
    mean_abs_reconstruction_diff: float
    denominator_underflows: int


@dataclass(frozen=True, eq=False)
class RcvReport:
    per_fold: tuple
    g_r: float
    g_p: float
    g_rcv: float
    provenance: dict
    denominator_underflows: int = 0

    def to_dict(self) -> dict:
        return {
            "aggregate": {"g_r": self.g_r, "g_p": self.g_p, "g_rcv": self.g_rcv},
            "provenance": self.provenance,
            "denominator_underflows": self.denominator_underflows,
            "per_fold": [
                {
                    "fold_id": f.fold_id,
                    "reconstruction_mape": f.reconstruction_mape,
                    "prediction_error": f.prediction_error,
                    "mean_abs_reconstruction_diff": f.mean_abs_reconstruction_diff,
                    "removed_indices": [int(i) + 1 for i in f.removed_indices],
                    "reconstructed_values": [float(v) for v in f.reconstructed_values],
                    "oos_predictions": [float(v) for v in f.oos_predictions],
                }
                for f in self.per_fold
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def residuals_csv(self, train: TimeSeries) -> str:
        buf = io.StringIO()
        buf.write(RESIDUALS_HEADER + "\n")
        for f in self.per_fold:
            for i, y_hat in zip(f.removed_indices, f.reconstructed_values):
                t, y = train.times[i], train.values[i]
                buf.write(
                    f"{f.fold_id},{int(i) + 1},{fmt(t)},{fmt(y)},{fmt(y_hat)},{fmt(abs(y - y_hat))}\n"
                )
        return buf.getvalue()

    def summary_line(self) -> str:
        return f"g_r={fmt(self.g_r)} g_p={fmt(self.g_p)} g_rcv={fmt(self.g_rcv)}"


def _check_pair(train, oos):
    if len(oos) == 0:
        raise EmptySeries("the out-of-sample series is empty")
    if not oos.times[0] > train.times[-1]:
        raise TimeOrderViolation(
            f"out-of-sample series starts at {oos.times[0]!r}, not after the "
            f"last training time {train.times[-1]!r}"
        )


def run_rcv(train: TimeSeries, oos: TimeSeries, cfg: RcvConfig, threads: int = 1) -> RcvReport:
    """Run rCV with ``cfg.k`` folds and collect per-fold detail.

    Folds are independent and may run on ``threads`` worker threads; results
    are aggregated in fold order, so the report does not depend on it.
    """
    _check_pair(train, oos)
    plan = assign_folds(len(train), cfg.k, cfg.seed)
    # every reconstruction lives on the training grid, so one factor serves all folds
    forecaster = KernelSolver.build(train.times, cfg.kernel)

    def one_fold(m):
        try:
            rec = reconstruct_fold(train, plan, m, cfg)
            w_hat = predict_oos(rec, oos.times, cfg, solver=forecaster)
            idx = plan.removed(m)
            r_err, g1 = _mape(train.values[idx], rec.values[idx], cfg.mape_epsilon)
            p_err, g2 = _prediction_fold_error(oos.values, w_hat, cfg)
        except RcvError as exc:
            raise with_context(exc, f"fold {m} of {cfg.k}") from exc
        return FoldResult(
            fold_id=m,
            removed_indices=idx,
            reconstructed_values=rec.values[idx],
            oos_predictions=w_hat,
            reconstruction_mape=r_err,
            prediction_error=p_err,
            mean_abs_reconstruction_diff=_fold_mean(np.abs(train.values[idx] - rec.values[idx])),
            denominator_underflows=g1 + g2,
        )

    fold_ids = range(1, cfg.k + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            folds = tuple(pool.map(one_fold, fold_ids))
    else:
        folds = tuple(one_fold(m) for m in fold_ids)

    g_r = _fold_mean([f.reconstruction_mape for f in folds])
    g_p = _fold_mean([f.prediction_error for f in folds])
    underflows = sum(f.denominator_underflows for f in folds)
    _warn_underflow(underflows, "error")
    provenance = {
        "seed": cfg.seed,
        "k": cfg.k,
        "n_train": len(train),
        "n_oos": len(oos),
        "kernel": asdict(cfg.kernel),
        "mape_epsilon": cfg.mape_epsilon,
        "gp_form": cfg.gp_form,
    }
    return RcvReport(folds, g_r, g_p, rcv_error(g_r, g_p), provenance, underflows)
