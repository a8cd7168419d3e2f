"""Exactly low-rank synthetic rating matrices with a known generator."""
from __future__ import annotations

import numpy as np

from .data import HdiMatrix
from .lfa import LatentState


def low_rank_matrix(num_users: int, num_items: int, rank: int, density: float,
                    seed: int = 0, low: float = 0.5, high: float = 1.5,
                    noise: float = 0.0) -> tuple[HdiMatrix, LatentState]:
    """Sample ``round(density * |U||I|)`` cells of ``A B^T`` without replacement.

    Factors are i.i.d. uniform on ``[low, high)``; returns the matrix and the
    generating factors.
    """
    rng = np.random.default_rng(seed)
    truth = LatentState(rng.uniform(low, high, (num_users, rank)),
                        rng.uniform(low, high, (num_items, rank)))
    n = int(round(density * num_users * num_items))
    cells = np.sort(rng.choice(num_users * num_items, size=n, replace=False))
    users, items = np.divmod(cells, num_items)
    ratings = np.einsum("kd,kd->k", truth.user_factors[users], truth.item_factors[items])
    if noise:
        ratings = ratings + noise * rng.standard_normal(n)
    return HdiMatrix.from_arrays(users, items, ratings, num_users, num_items), truth
