"""Latent factor state, predictions, the regularized objective and its gradient.

Flat parameter vectors have length ``(|U| + |I|) * f``: every user row first,
then every item row, row-major within an entity. Gradient-like vectors are
always stored negated (``-g``), which is also the first CG search direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import HdiMatrix
from .errors import ConfigError, DimensionError, EvaluationError

INIT_HIGH = 0.04


@dataclass(eq=False)
class LatentState:
    user_factors: np.ndarray  # |U| x f
    item_factors: np.ndarray  # |I| x f

    @property
    def f(self) -> int:
        return self.user_factors.shape[1]

    @property
    def num_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_factors.shape[0]

    @property
    def size(self) -> int:
        return (self.num_users + self.num_items) * self.f

    def copy(self) -> "LatentState":
        return LatentState(self.user_factors.copy(), self.item_factors.copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.user_factors.ravel(), self.item_factors.ravel()])

    @classmethod
    def from_vector(cls, vec, num_users: int, num_items: int, f: int) -> "LatentState":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != ((num_users + num_items) * f,):
            raise DimensionError(f"vector of shape {vec.shape} does not fit "
                                 f"({num_users}+{num_items})*{f} parameters")
        k = num_users * f
        return cls(vec[:k].reshape(num_users, f).copy(), vec[k:].reshape(num_items, f).copy())

    def split(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Views of a flat parameter vector as (user block, item block)."""
        if vec.shape != (self.size,):
            raise DimensionError(f"parameter vector has shape {vec.shape}, expected ({self.size},)")
        k = self.num_users * self.f
        return vec[:k].reshape(self.num_users, self.f), vec[k:].reshape(self.num_items, self.f)

    def add_(self, delta: np.ndarray) -> "LatentState":
        """In-place ``X += delta`` for a flat parameter vector."""
        du, di = self.split(delta)
        self.user_factors += du
        self.item_factors += di
        return self

    def __eq__(self, other):
        if not isinstance(other, LatentState):
            return NotImplemented
        return (np.array_equal(self.user_factors, other.user_factors)
                and np.array_equal(self.item_factors, other.item_factors))


def init_latent(num_users: int, num_items: int, f: int, seed: int | None = None,
                high: float = INIT_HIGH) -> LatentState:
    """Factors drawn i.i.d. from U(0, high)."""
    if f < 1:
        raise ConfigError(f"latent dimension f must be >= 1, got {f}")
    rng = np.random.default_rng(seed)
    return LatentState(rng.uniform(0.0, high, size=(num_users, f)),
                       rng.uniform(0.0, high, size=(num_items, f)))


def check_shapes(state: LatentState, matrix: HdiMatrix):
    if state.num_users != matrix.num_users or state.num_items != matrix.num_items:
        raise DimensionError(
            f"state is {state.num_users}x{state.num_items} users/items, "
            f"matrix is {matrix.num_users}x{matrix.num_items}")


def predict(state: LatentState, u: int, i: int) -> float:
    if not (0 <= u < state.num_users and 0 <= i < state.num_items):
        raise IndexError(f"(u={u}, i={i}) outside {state.num_users}x{state.num_items}")
    return float(state.user_factors[u] @ state.item_factors[i])


def predict_entries(state: LatentState, users, items) -> np.ndarray:
    return np.einsum("kd,kd->k", state.user_factors[users], state.item_factors[items])


def residuals(state: LatentState, matrix: HdiMatrix) -> np.ndarray:
    """``r - sigma(X)`` for every known entry, in entry order."""
    check_shapes(state, matrix)
    return matrix.ratings - predict_entries(state, matrix.users, matrix.items)


def objective(state: LatentState, matrix: HdiMatrix, lam: float) -> float:
    """Half the squared error plus a per-known-entry Tikhonov penalty."""
    if lam < 0:
        raise ConfigError("lambda must be non-negative")
    err = residuals(state, matrix)
    reg = (np.einsum("kd,kd->k", state.user_factors[matrix.users], state.user_factors[matrix.users])
           + np.einsum("kd,kd->k", state.item_factors[matrix.items], state.item_factors[matrix.items]))
    return 0.5 * float(np.sum(err * err + lam * reg))


def assemble_gradient(state: LatentState, errors: np.ndarray, matrix: HdiMatrix,
                      lam: float) -> np.ndarray:
    """Negative gradient built from (possibly refined) per-entry errors.

    With raw residuals this is exactly ``-grad objective``; the shrinkage term
    is weighted by ``|K_u|`` and ``|K_i|`` because the penalty is summed per
    known entry.
    """
    check_shapes(state, matrix)
    errors = np.asarray(errors, dtype=np.float64)
    if errors.shape != (matrix.num_entries,):
        raise DimensionError(f"errors have shape {errors.shape}, expected ({matrix.num_entries},)")
    XU, XI = state.user_factors, state.item_factors
    gu = matrix.user_incidence @ (errors[:, None] * XI[matrix.items])
    gi = matrix.item_incidence @ (errors[:, None] * XU[matrix.users])
    gu -= lam * matrix.user_counts[:, None] * XU
    gi -= lam * matrix.item_counts[:, None] * XI
    return np.concatenate([gu.ravel(), gi.ravel()])


def rmse(state: LatentState, eval_set: HdiMatrix) -> float:
    if eval_set.num_entries < 1:
        raise EvaluationError("RMSE over an empty evaluation set")
    err = eval_set.ratings - predict_entries(state, eval_set.users, eval_set.items)
    return float(np.sqrt(np.mean(err * err)))
