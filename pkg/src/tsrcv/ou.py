"""Ornstein-Uhlenbeck sample paths drawn as one multivariate Gaussian.

The training and out-of-sample segments are one joint draw over a single
grid, so the out-of-sample points are a genuine continuation of the
training series.

Random numbers come from numpy's PCG64 bit generator seeded with the 64-bit
``seed``; standard normals use numpy's ziggurat transform
(``Generator.standard_normal``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .linalg import KernelConfig, cholesky_factor, distance_matrix, kernel_matrix
from .series import TimeSeries, split_regular_grid

SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidConfig(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= SEED_MAX:
        raise InvalidConfig(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return int(seed)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


@dataclass(frozen=True)
class OuConfig:
    n_train: int = 1000
    n_oos: int = 250
    dt: float = 0.1
    t0: float = 0.0
    mu: float = 5.0
    kernel: KernelConfig = field(default_factory=KernelConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 2:
            raise InvalidConfig(f"n_train must be >= 2, got {self.n_train}")
        if self.n_oos < 0:
            raise InvalidConfig(f"n_oos must be >= 0, got {self.n_oos}")
        if not self.dt > 0:
            raise InvalidConfig(f"dt must be > 0, got {self.dt}")
        check_seed(self.seed)

    def grid(self) -> np.ndarray:
        return split_regular_grid(self.n_train + self.n_oos, self.dt, self.t0)


def ou_covariance(times, kernel: KernelConfig) -> np.ndarray:
    return kernel_matrix(distance_matrix(times, times), kernel)


def sample_ou(cfg: OuConfig) -> tuple[TimeSeries, TimeSeries]:
    """Draw ``mu + chol(Sigma + jitter I) z`` and split it into train/oos."""
    grid = cfg.grid()
    (c, _), _ = cholesky_factor(ou_covariance(grid, cfg.kernel), cfg.kernel.jitter)
    z = make_rng(cfg.seed).standard_normal(grid.size)
    path = cfg.mu + np.tril(c) @ z
    n = cfg.n_train
    train = TimeSeries(grid[:n], path[:n])
    oos = TimeSeries(grid[n:], path[n:]) if cfg.n_oos else TimeSeries.empty()
    return train, oos


def stationary_marginal_variance(cfg: OuConfig) -> float:
    # the kernel is exp(-0 / length_scale) == 1 on the diagonal for any scale
    return float(kernel_matrix(np.zeros((1, 1)), cfg.kernel)[0, 0])
