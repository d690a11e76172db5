import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import direct_regression, exp_kernel_loops, gauss_jordan_inverse, random_spd
from tsrcv.errors import EmptyInput, InvalidConfig, NotPositiveDefinite
from tsrcv.linalg import (
    KernelConfig,
    KernelSolver,
    cholesky_factor,
    cholesky_solve,
    distance_matrix,
    gp_regress,
    kernel_matrix,
)
from tsrcv.series import TimeSeries


def test_distance_matrix_examples():
    d = distance_matrix([0, 1, 3], [0, 1, 3])
    assert d.tolist() == [[0, 1, 3], [1, 0, 2], [3, 2, 0]]
    assert distance_matrix([5.0], [5.0]).tolist() == [[0.0]]
    assert distance_matrix([0, 1], [2]).tolist() == [[2], [1]]
    with pytest.raises(EmptyInput):
        distance_matrix([], [1.0])


def test_kernel_matrix_examples():
    cfg = KernelConfig(length_scale=2.0)
    assert kernel_matrix([[0.0]], cfg).tolist() == [[1.0]]
    assert kernel_matrix([[2.0]], cfg)[0, 0] == pytest.approx(0.367879441, abs=1e-9)
    assert kernel_matrix([[1.0]], cfg)[0, 0] == pytest.approx(0.606530660, abs=1e-9)


@pytest.mark.parametrize("kwargs", [{"length_scale": 0.0}, {"ridge": -1.0}, {"jitter": -1e-12}])
def test_kernel_config_rejects(kwargs):
    with pytest.raises(InvalidConfig):
        KernelConfig(**kwargs)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30),
       st.floats(0.05, 50))
def test_kernel_square_properties(times, scale):
    k = kernel_matrix(distance_matrix(times, times), KernelConfig(length_scale=scale))
    assert np.all(k > 0) and np.all(k <= 1)
    assert np.array_equal(k, k.T)
    assert np.all(np.diag(k) == 1.0)
    np.testing.assert_allclose(k, exp_kernel_loops(times, times, scale), rtol=1e-14)


def test_cholesky_solve_examples():
    assert cholesky_solve(np.eye(3), [1, 2, 3], jitter=0.0).tolist() == [1, 2, 3]
    np.testing.assert_allclose(cholesky_solve([[2, 0], [0, 4]], [2, 8], jitter=0.0), [1, 2])


def test_cholesky_solve_vs_inverse_oracle():
    rng = np.random.default_rng(20)
    a = random_spd(rng, 20)
    b = rng.standard_normal(20)
    x = cholesky_solve(a, b, jitter=0.0)
    assert np.max(np.abs(x - gauss_jordan_inverse(a) @ b)) < 1e-9


def test_cholesky_solve_matrix_rhs():
    rng = np.random.default_rng(5)
    a = random_spd(rng, 8)
    b = rng.standard_normal((8, 3))
    np.testing.assert_allclose(a @ cholesky_solve(a, b, jitter=0.0), b, atol=1e-10)


def test_jitter_escalation_rescues_semidefinite():
    # rank-1 PSD matrix: singular at jitter 0, fine after escalation
    v = np.ones((3, 1))
    _, used = cholesky_factor(v @ v.T, jitter=0.0)
    assert used == 1e-8


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        cholesky_solve([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])


def test_gp_single_point_hand_value():
    train = TimeSeries([0.0], [2.0])
    pred = gp_regress(train, [0.0], KernelConfig(ridge=1.0))
    # K_ii = 1, L = 2, K_ji = 1  ->  1 * 2 / 2
    assert pred[0] == pytest.approx(1.0, abs=1e-9)


def test_gp_three_points_vs_oracle():
    t = [0.0, 0.1, 0.2]
    y = [5.2, 4.7, 5.05]
    q = [0.05, 0.3, 1.0]
    cfg = KernelConfig(ridge=1.0)
    pred = gp_regress(TimeSeries(t, y), q, cfg)
    ref = direct_regression(t, y, q, ridge=1.0, jitter=cfg.jitter)
    assert np.max(np.abs(pred - ref)) < 1e-10


def test_gp_interpolates_without_ridge():
    rng = np.random.default_rng(0)
    t = np.arange(30) * 0.1
    y = 5 + rng.standard_normal(30)
    pred = gp_regress(TimeSeries(t, y), t, KernelConfig(ridge=0.0, jitter=1e-10))
    assert np.max(np.abs(pred - y)) < 1e-6


def test_unit_ridge_does_not_interpolate():
    rng = np.random.default_rng(0)
    t = np.arange(30) * 0.1
    y = 5 + rng.standard_normal(30)
    pred = gp_regress(TimeSeries(t, y), t, KernelConfig(ridge=1.0))
    assert np.max(np.abs(pred - y)) > 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
def test_gp_linear_in_values(seed, alpha):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.choice(200, size=15, replace=False)) * 0.1
    y = rng.standard_normal(15)
    q = rng.uniform(0, 25, size=7)
    cfg = KernelConfig()
    a = gp_regress(TimeSeries(t, alpha * y), q, cfg)
    b = alpha * gp_regress(TimeSeries(t, y), q, cfg)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_center_mean_extension():
    t = np.arange(10) * 0.1
    y = np.full(10, 5.0)
    far = [1000.0]
    raw = gp_regress(TimeSeries(t, y), far, KernelConfig())
    centred = gp_regress(TimeSeries(t, y), far, KernelConfig(center_mean=True))
    assert abs(raw[0]) < 1e-12
    assert centred[0] == pytest.approx(5.0)


def test_solver_reuse_matches_fresh_solve():
    t = np.arange(50) * 0.1
    cfg = KernelConfig()
    solver = KernelSolver.build(t, cfg)
    rng = np.random.default_rng(1)
    for _ in range(3):
        y = rng.standard_normal(50)
        q = rng.uniform(5, 10, 4)
        np.testing.assert_array_equal(solver.predict(y, q), gp_regress(TimeSeries(t, y), q, cfg))


def test_gp_rejects_empty_query():
    with pytest.raises(EmptyInput):
        gp_regress(TimeSeries([0.0], [1.0]), [], KernelConfig())
