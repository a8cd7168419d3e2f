import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pslf import (HvpConfig, LatentState, assemble_gradient, cg_solve, gn_hvp, jtvp, jvp,
                  residuals)
from pslf.errors import ConfigError, DimensionError, SolverError
from pslf.oracle import dense_gauss_newton, dense_jacobian, dense_solve
from pslf.second_order import GaussNewtonOperator

from conftest import random_instance


def test_jvp_instance_a(instance_a):
    m, s = instance_a
    np.testing.assert_array_equal(jvp(s, np.ones(4), m), [2, 2, 3])
    np.testing.assert_array_equal(jvp(s, np.zeros(4), m), 0.0)
    np.testing.assert_array_equal(dense_jacobian(s, m) @ np.ones(4), [2, 2, 3])


def test_jvp_of_state_is_twice_prediction():
    rng = np.random.default_rng(2)
    for _ in range(10):
        m, s = random_instance(rng, high=1.0)
        pred = m.ratings - residuals(s, m)
        np.testing.assert_allclose(jvp(s, s.to_vector(), m), 2 * pred, rtol=1e-13)
        np.testing.assert_allclose(dense_jacobian(s, m) @ s.to_vector(), 2 * pred, rtol=1e-13)


def test_jtvp_instance_a(instance_a):
    m, s = instance_a
    np.testing.assert_array_equal(jtvp(s, np.array([2.0, 2.0, 3.0]), m), [4, 3, 8, 2])
    np.testing.assert_array_equal(jtvp(s, np.zeros(3), m), 0.0)
    with pytest.raises(DimensionError):
        jtvp(s, np.zeros(2), m)


def test_gradient_is_jtvp_of_residuals_minus_shrinkage():
    rng = np.random.default_rng(4)
    for _ in range(10):
        m, s = random_instance(rng, high=1.0)
        lam = 0.07
        e = residuals(s, m)
        counts = np.concatenate([np.repeat(m.user_counts, s.f), np.repeat(m.item_counts, s.f)])
        expect = jtvp(s, e, m) - lam * counts * s.to_vector()
        np.testing.assert_allclose(assemble_gradient(s, e, m, lam), expect, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("lam, gamma, expect", [
    (0.0, 0.0, [4, 3, 8, 2]),
    (0.0, 10.0, [14, 13, 18, 12]),
    (1.0, 0.0, [6, 4, 10, 3]),
])
def test_gn_hvp_instance_a(instance_a, lam, gamma, expect):
    m, s = instance_a
    cfg = HvpConfig(lam, gamma)
    np.testing.assert_array_equal(gn_hvp(s, np.ones(4), m, cfg), expect)
    np.testing.assert_array_equal(dense_gauss_newton(s, m, cfg) @ np.ones(4), expect)


def test_hvp_config_rejects_negative():
    with pytest.raises(ConfigError):
        HvpConfig(-1.0, 0.0)


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_hvp_linear_symmetric_psd_and_dense_equal(seed):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng)
    cfg = HvpConfig(float(rng.choice([0.0, 0.05])), float(rng.choice([0.0, 10.0])))
    op = GaussNewtonOperator(s, m, cfg)
    v1, v2 = rng.normal(size=s.size), rng.normal(size=s.size)
    a, b = rng.normal(size=2)
    lhs = op(a * v1 + b * v2)
    assert _rel(lhs, a * op(v1) + b * op(v2)) <= 1e-10 or np.linalg.norm(lhs) < 1e-14
    x, y = v1 @ op(v2), v2 @ op(v1)
    assert abs(x - y) <= 1e-10 * max(abs(x), abs(y), 1e-300) or abs(x - y) < 1e-15
    q = v1 @ op(v1)
    assert q >= -1e-12 * (v1 @ v1)
    if cfg.gamma > 0:
        assert q >= cfg.gamma * (v1 @ v1) * (1 - 1e-12)
    dense = dense_gauss_newton(s, m, cfg) @ v1
    assert _rel(op(v1), dense) <= 1e-10 or np.linalg.norm(dense) < 1e-14


def test_cg_identity_one_iteration():
    b = np.array([3.0, -1.0, 2.0])
    res = cg_solve(lambda v: v, b, tol=0.0, max_iters=10)
    np.testing.assert_array_equal(res.delta, b)
    assert res.iterations == 1 and res.converged and res.final_residual_norm == 0.0


def test_cg_zero_rhs():
    res = cg_solve(lambda v: v, np.zeros(4), tol=1e-12, max_iters=10)
    assert res.iterations == 0 and res.converged
    np.testing.assert_array_equal(res.delta, 0.0)


def test_cg_instance_a_matches_dense_solve(instance_a):
    m, s = instance_a
    cfg = HvpConfig(0.0, 10.0)
    rhs = np.array([6.0, 2.0, 8.0, 2.0])
    res = cg_solve(GaussNewtonOperator(s, m, cfg), rhs, tol=1e-10, max_iters=50)
    direct = dense_solve(dense_gauss_newton(s, m, cfg), rhs)
    np.testing.assert_allclose(res.delta, direct, atol=1e-8, rtol=0)
    assert res.converged and res.iterations <= 4


def test_cg_respects_max_iters_and_max_norm():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(20, 20))
    A = A @ A.T + np.eye(20)
    b = rng.normal(size=20)
    res = cg_solve(lambda v: A @ v, b, tol=1e-14, max_iters=3)
    assert res.iterations == 3 and not res.converged
    res = cg_solve(lambda v: A @ v, b, tol=1e-3, max_iters=100, norm="max")
    assert res.converged and np.max(np.abs(b - A @ res.delta)) <= 1e-3 * (1 + 1e-9)
    with pytest.raises(ConfigError):
        cg_solve(lambda v: v, b, 1.0, 5, norm="l1")


def test_cg_negative_curvature_raises():
    with pytest.raises(SolverError) as exc:
        cg_solve(lambda v: -v, np.ones(3), tol=1e-10, max_iters=5)
    assert exc.value.iteration == 1
    with pytest.raises(SolverError):
        cg_solve(lambda v: v, np.array([np.nan, 1.0]), tol=1e-10, max_iters=5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_cg_quadratic_model_descends(seed):
    rng = np.random.default_rng(seed)
    m, s = random_instance(rng, high=1.0)
    op = GaussNewtonOperator(s, m, HvpConfig(0.05, 1.0))
    rhs = assemble_gradient(s, residuals(s, m), m, 0.05)
    vals = [0.0]

    def record(k, x):
        vals.append(0.5 * x @ op(x) - rhs @ x)

    cg_solve(op, rhs, tol=1e-12, max_iters=s.size, callback=record)
    scale = max(abs(v) for v in vals) + 1.0
    assert all(b <= a + 1e-9 * scale for a, b in zip(vals, vals[1:]))


def test_cg_matches_dense_on_spd_systems():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(1, 15))
        B = rng.normal(size=(n, n))
        A = B @ B.T + n * np.eye(n)
        b = rng.normal(size=n)
        res = cg_solve(lambda v: A @ v, b, tol=1e-14, max_iters=4 * n)
        np.testing.assert_allclose(res.delta, dense_solve(A, b), atol=1e-6)


def test_operator_state_mismatch(instance_a):
    m, _ = instance_a
    with pytest.raises(DimensionError):
        gn_hvp(LatentState(np.ones((3, 1)), np.ones((2, 1))), np.ones(5), m)
