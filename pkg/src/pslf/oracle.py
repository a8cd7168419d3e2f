"""Dense brute-force references for the matrix-free operations.

Only meant for tiny instances in tests; every function refuses problems with
more than ``MAX_PARAMS`` parameters.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .data import HdiMatrix
from .errors import OracleError
from .lfa import LatentState, check_shapes, objective
from .second_order import HvpConfig

MAX_PARAMS = 4096


def _guard(n):
    if n > MAX_PARAMS:
        raise OracleError(f"{n} parameters exceeds the dense oracle limit of {MAX_PARAMS}")


def dense_jacobian(state: LatentState, matrix: HdiMatrix) -> np.ndarray:
    """|K| x (|U|+|I|)f Jacobian of the per-entry predictions."""
    check_shapes(state, matrix)
    _guard(state.size)
    f = state.f
    off = state.num_users * f
    J = np.zeros((matrix.num_entries, state.size))
    for k, (u, i, _) in enumerate(matrix.entries()):
        J[k, u * f:(u + 1) * f] = state.item_factors[i]
        J[k, off + i * f:off + (i + 1) * f] = state.user_factors[u]
    return J


def dense_gauss_newton(state: LatentState, matrix: HdiMatrix,
                       cfg: HvpConfig = HvpConfig()) -> np.ndarray:
    J = dense_jacobian(state, matrix)
    counts = np.concatenate([np.repeat(matrix.user_counts, state.f),
                             np.repeat(matrix.item_counts, state.f)])
    return J.T @ J + np.diag(cfg.lam * counts + cfg.gamma)


def dense_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve of a symmetric positive definite system."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    _guard(A.shape[0])
    try:
        c = linalg.cho_factor(A)
    except linalg.LinAlgError as exc:
        raise OracleError(f"matrix is not positive definite: {exc}") from None
    return linalg.cho_solve(c, np.asarray(b, dtype=np.float64))


def fd_gradient(state: LatentState, matrix: HdiMatrix, lam: float,
                h: float | None = None) -> np.ndarray:
    """Central-difference gradient of the objective (not negated).

    The default step per coordinate is ``1e-6 * max(1, |x|)``.
    """
    _guard(state.size)
    x0 = state.to_vector()
    nu, ni, f = state.num_users, state.num_items, state.f
    grad = np.empty_like(x0)
    for k in range(x0.size):
        step = h if h is not None else 1e-6 * max(1.0, abs(x0[k]))
        if step <= 0:
            raise OracleError("finite-difference step must be positive")
        xp, xm = x0.copy(), x0.copy()
        xp[k] += step
        xm[k] -= step
        ep = objective(LatentState.from_vector(xp, nu, ni, f), matrix, lam)
        em = objective(LatentState.from_vector(xm, nu, ni, f), matrix, lam)
        grad[k] = (ep - em) / (xp[k] - xm[k])
    return grad
