"""Exponential-kernel linear algebra and the kernel-regression solve.

The factorization and triangular solves go through LAPACK (``scipy.linalg``);
no explicit inverse is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import EmptyInput, InvalidConfig, NotPositiveDefinite
from .series import TimeSeries

DEFAULT_JITTER = 1e-10
ESCALATED_JITTER = 1e-8


@dataclass(frozen=True)
class KernelConfig:
    """Parameters of ``exp(-|dt| / length_scale)`` and of the regularised solve.

    Parameters
    ----------
    length_scale : float
        Decay length of the exponential kernel, in time units.
    ridge : float
        Regularisation added to the kernel diagonal; 1.0 is unit regularisation.
    jitter : float
        Extra diagonal stabiliser applied before factorization.
    center_mean : bool
        Extension, off by default: subtract the training mean before the
        solve and add it back to the predictions.
    """

    length_scale: float = 2.0
    ridge: float = 1.0
    jitter: float = DEFAULT_JITTER
    center_mean: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.length_scale) and self.length_scale > 0):
            raise InvalidConfig(f"length_scale must be > 0, got {self.length_scale!r}")
        if not (np.isfinite(self.ridge) and self.ridge >= 0):
            raise InvalidConfig(f"ridge must be >= 0, got {self.ridge!r}")
        if not (np.isfinite(self.jitter) and self.jitter >= 0):
            raise InvalidConfig(f"jitter must be >= 0, got {self.jitter!r}")


def distance_matrix(times_a, times_b) -> np.ndarray:
    """Matrix of absolute time differences ``|a_i - b_j|``."""
    a = np.asarray(times_a, dtype=np.float64).reshape(-1)
    b = np.asarray(times_b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("distance_matrix needs two nonempty time vectors")
    return np.abs(a[:, None] - b[None, :])


def kernel_matrix(d, cfg: KernelConfig) -> np.ndarray:
    return np.exp(-np.asarray(d, dtype=np.float64) / cfg.length_scale)


def _escalation(jitter):
    return max(ESCALATED_JITTER, 100.0 * jitter)


def cholesky_factor(a, jitter: float = DEFAULT_JITTER):
    """Lower Cholesky factor of ``a + jitter * I``.

    On failure the jitter is raised once (to 1e-8, or 100x a larger user
    value) before giving up with :class:`NotPositiveDefinite`.

    Returns
    -------
    (c, lower), jitter_used
        ``(c, lower)`` is the pair accepted by ``scipy.linalg.cho_solve``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidConfig(f"expected a square matrix, got shape {a.shape}")
    eye = np.eye(a.shape[0])
    for j in (jitter, _escalation(jitter)):
        try:
            c = sla.cho_factor(a + j * eye, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        return c, j
    raise NotPositiveDefinite(
        f"Cholesky factorization of a {a.shape[0]}x{a.shape[0]} matrix failed "
        f"with jitter {jitter:g} and {_escalation(jitter):g}"
    )


def cholesky_solve(a, b, jitter: float = DEFAULT_JITTER) -> np.ndarray:
    """Solve ``(a + jitter * I) x = b`` for symmetric positive-definite ``a``."""
    factor, _ = cholesky_factor(a, jitter)
    return sla.cho_solve(factor, np.asarray(b, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class KernelSolver:
    """Factorized ``K_ii + ridge * I`` for a fixed set of training times.

    The factor depends only on the times, so one solver can be shared
    read-only by every fold that regresses from the same grid.
    """

    times: np.ndarray
    cfg: KernelConfig
    factor: tuple
    jitter_used: float

    @classmethod
    def build(cls, times, cfg: KernelConfig) -> "KernelSolver":
        times = np.asarray(times, dtype=np.float64).reshape(-1)
        k_ii = kernel_matrix(distance_matrix(times, times), cfg)
        k_ii[np.diag_indices_from(k_ii)] += cfg.ridge
        factor, used = cholesky_factor(k_ii, cfg.jitter)
        return cls(times, cfg, factor, used)

    def weights(self, values) -> np.ndarray:
        """``(K_ii + ridge I)^-1 y`` via the stored factor."""
        return sla.cho_solve(self.factor, np.asarray(values, dtype=np.float64))

    def predict(self, values, query_times) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        query = np.asarray(query_times, dtype=np.float64).reshape(-1)
        if query.size == 0:
            return np.empty(0)
        offset = float(values.mean()) if self.cfg.center_mean else 0.0
        k_ji = kernel_matrix(distance_matrix(query, self.times), self.cfg)
        return k_ji @ self.weights(values - offset) + offset


def gp_regress(train: TimeSeries, query_times, cfg: KernelConfig) -> np.ndarray:
    """Kernel-regression prediction ``K_ji (K_ii + ridge I)^-1 y_i``.

    Raw training values are used unless ``cfg.center_mean`` is set, so with
    a nonzero process mean the predictions relax toward zero far from data.
    """
    query = np.asarray(query_times, dtype=np.float64).reshape(-1)
    if query.size == 0:
        raise EmptyInput("gp_regress needs at least one query time")
    return KernelSolver.build(train.times, cfg).predict(train.values, query)
