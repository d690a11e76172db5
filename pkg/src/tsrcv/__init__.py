"""Reconstructive cross-validation (rCV) and learning curves for time series."""

__version__ = "0.1.0"

from .curves import LearningCurve, SweepConfig, derive_seed, emit_curve, read_curve, sweep
from .engine import (
    RcvConfig,
    RcvReport,
    assign_folds,
    predict_oos,
    prediction_error,
    rcv_error,
    reconstruct_fold,
    reconstruction_error,
    run_rcv,
)
from .errors import *  # noqa: F401,F403
from .linalg import KernelConfig, cholesky_solve, distance_matrix, gp_regress, kernel_matrix
from .ou import OuConfig, sample_ou, stationary_marginal_variance
from .series import FoldPlan, TimeSeries, new_time_series, split_regular_grid
