import numpy as np
import pytest

from pslf import HvpConfig, LatentState, predict
from pslf.data import HdiMatrix
from pslf.errors import OracleError
from pslf.oracle import MAX_PARAMS, dense_gauss_newton, dense_jacobian, dense_solve, fd_gradient

from conftest import random_instance


def test_jacobian_instance_a(instance_a):
    m, s = instance_a
    np.testing.assert_array_equal(dense_jacobian(s, m), [[1, 0, 1, 0], [1, 0, 0, 1], [0, 1, 2, 0]])
    zero = LatentState(np.zeros((2, 1)), np.zeros((2, 1)))
    np.testing.assert_array_equal(dense_jacobian(zero, m), 0.0)


def test_jacobian_matches_directional_differences():
    rng = np.random.default_rng(1)
    m, s = random_instance(rng, high=1.0)
    J = dense_jacobian(s, m)
    v = rng.normal(size=s.size)
    h = 1e-6
    nu, ni, f = s.num_users, s.num_items, s.f
    plus = LatentState.from_vector(s.to_vector() + h * v, nu, ni, f)
    minus = LatentState.from_vector(s.to_vector() - h * v, nu, ni, f)
    fd = np.array([(predict(plus, u, i) - predict(minus, u, i)) / (2 * h) for u, i, _ in m.entries()])
    np.testing.assert_allclose(J @ v, fd, rtol=1e-7, atol=1e-9)


def test_jacobian_columns_of_unrated_entities_are_zero():
    m = HdiMatrix.from_arrays([0, 0], [0, 2], [1.0, 2.0], num_users=3, num_items=4)
    s = LatentState(np.ones((3, 2)), np.ones((4, 2)))
    J = dense_jacobian(s, m)
    f = 2
    zero_cols = list(range(1 * f, 3 * f)) + [6 + 1 * f, 6 + 1 * f + 1, 6 + 3 * f, 6 + 3 * f + 1]
    assert np.all(J[:, zero_cols] == 0)


def test_gauss_newton_instance_a(instance_a):
    m, s = instance_a
    G = dense_gauss_newton(s, m)
    expect = np.array([[2, 0, 1, 1], [0, 1, 2, 0], [1, 2, 5, 0], [1, 0, 0, 1]], dtype=float)
    np.testing.assert_array_equal(G, expect)
    np.testing.assert_array_equal(np.diag(G), [2, 1, 5, 1])
    zero = LatentState(np.zeros((2, 1)), np.zeros((2, 1)))
    np.testing.assert_array_equal(dense_gauss_newton(zero, m), 0.0)


def test_gauss_newton_symmetric_psd_and_damped():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m, s = random_instance(rng, high=1.0)
        G = dense_gauss_newton(s, m)
        assert np.max(np.abs(G - G.T)) <= 1e-14
        assert np.linalg.eigvalsh(G).min() >= -1e-10
        Gd = dense_gauss_newton(s, m, HvpConfig(0.05, 3.0))
        assert np.linalg.eigvalsh(Gd).min() >= 3.0 - 1e-10


def test_dense_solve():
    b = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(dense_solve(np.eye(3), b), b)
    np.testing.assert_allclose(dense_solve(np.array([[4.0]]), np.array([2.0])), [0.5])
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    x = dense_solve(A, np.array([1.0, 2.0]))
    assert np.linalg.norm(A @ x - [1.0, 2.0]) <= 1e-10 * np.linalg.norm([1.0, 2.0])
    with pytest.raises(OracleError):
        dense_solve(np.array([[1.0, 0.0], [0.0, -1.0]]), np.ones(2))


def test_fd_gradient_examples(instance_a):
    m, s = instance_a
    np.testing.assert_allclose(fd_gradient(s, m, 0.0, h=1e-6), [-6, -2, -8, -2], rtol=1e-7)
    zero = LatentState(np.zeros((2, 1)), np.zeros((2, 1)))
    np.testing.assert_allclose(fd_gradient(zero, m, 0.0), 0.0, atol=1e-9)
    with pytest.raises(OracleError):
        fd_gradient(s, m, 0.0, h=0.0)


def test_size_guard():
    n = MAX_PARAMS // 2 + 1
    m = HdiMatrix.from_arrays([0], [0], [1.0], num_users=n, num_items=n)
    s = LatentState(np.zeros((n, 1)), np.zeros((n, 1)))
    with pytest.raises(OracleError):
        dense_jacobian(s, m)
