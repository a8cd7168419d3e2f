"""Matrix-free damped Gauss-Newton products and the inner conjugate gradient solver."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import HdiMatrix
from .errors import ConfigError, DimensionError, SolverError
from .lfa import LatentState, check_shapes


@dataclass(frozen=True)
class HvpConfig:
    lam: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.lam < 0 or self.gamma < 0:
            raise ConfigError(f"lambda and gamma must be non-negative, got {self.lam}, {self.gamma}")


@dataclass
class CgResult:
    delta: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool


class GaussNewtonOperator:
    """``v -> (J^T J + lam*diag(|K_.|) + gamma*I) v`` at a fixed state.

    The factor rows gathered per known entry are cached, since the state is
    constant across the CG iterations of one outer step.
    """

    def __init__(self, state: LatentState, matrix: HdiMatrix, cfg: HvpConfig = HvpConfig()):
        check_shapes(state, matrix)
        self.state = state
        self.matrix = matrix
        self.cfg = cfg
        self._xu = state.user_factors[matrix.users]
        self._xi = state.item_factors[matrix.items]
        self._diag = np.concatenate([
            np.repeat(cfg.lam * matrix.user_counts + cfg.gamma, state.f),
            np.repeat(cfg.lam * matrix.item_counts + cfg.gamma, state.f),
        ])

    def jvp(self, v: np.ndarray) -> np.ndarray:
        vu, vi = self.state.split(v)
        m = self.matrix
        return (np.einsum("kd,kd->k", vu[m.users], self._xi)
                + np.einsum("kd,kd->k", self._xu, vi[m.items]))

    def jtvp(self, w: np.ndarray) -> np.ndarray:
        m = self.matrix
        if w.shape != (m.num_entries,):
            raise DimensionError(f"entry vector has shape {w.shape}, expected ({m.num_entries},)")
        out_u = m.user_incidence @ (w[:, None] * self._xi)
        out_i = m.item_incidence @ (w[:, None] * self._xu)
        return np.concatenate([out_u.ravel(), out_i.ravel()])

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.jtvp(self.jvp(v)) + self._diag * v


def jvp(state: LatentState, v: np.ndarray, matrix: HdiMatrix) -> np.ndarray:
    """R-operator of the predictions: ``J v`` as one value per known entry."""
    return GaussNewtonOperator(state, matrix).jvp(np.asarray(v, dtype=np.float64))


def jtvp(state: LatentState, w: np.ndarray, matrix: HdiMatrix) -> np.ndarray:
    """``J^T w`` for an entry-space vector ``w``."""
    return GaussNewtonOperator(state, matrix).jtvp(np.asarray(w, dtype=np.float64))


def gn_hvp(state: LatentState, v: np.ndarray, matrix: HdiMatrix,
           cfg: HvpConfig = HvpConfig()) -> np.ndarray:
    return GaussNewtonOperator(state, matrix, cfg)(np.asarray(v, dtype=np.float64))


def _l2(r):
    return float(np.sqrt(r @ r))


def _maxabs(r):
    return float(np.max(np.abs(r))) if r.size else 0.0


RESIDUAL_NORMS = {"l2": _l2, "max": _maxabs}


def cg_solve(apply: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray, tol: float,
             max_iters: int, norm: str = "l2",
             callback: Callable[[int, np.ndarray], None] | None = None) -> CgResult:
    """Plain conjugate gradient for ``A x = rhs`` starting from ``x = 0``.

    Stops once the residual norm (``"l2"`` or per-component ``"max"``) drops
    to ``tol`` or after ``max_iters`` iterations. ``callback(k, x)`` sees the
    iterate after every iteration.
    """
    if max_iters < 0:
        raise ConfigError("max_iters must be >= 0")
    try:
        measure = RESIDUAL_NORMS[norm]
    except KeyError:
        raise ConfigError(f"unknown residual norm {norm!r}") from None
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.all(np.isfinite(rhs)):
        raise SolverError(0, "non-finite right-hand side")

    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    k = 0
    rnorm = measure(r)
    while rnorm > tol and k < max_iters:
        Ap = apply(p)
        curv = float(p @ Ap)
        if not np.isfinite(curv) or curv <= 0.0:
            raise SolverError(k + 1, f"curvature p.Ap = {curv!r} along the search direction")
        alpha = rs / curv
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
        k += 1
        rnorm = measure(r)
        if not np.isfinite(rnorm):
            raise SolverError(k, "non-finite residual")
        if callback is not None:
            callback(k, x)
    return CgResult(x, k, rnorm, bool(rnorm <= tol))
