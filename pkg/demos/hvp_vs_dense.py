"""
Matrix-free curvature products against an explicit Jacobian
===========================================================

The trainers never form J or G.  Here we build both densely on a random
toy problem and compare, then time the two routes as the problem grows.
"""
import time

import numpy as np

from pslf import HvpConfig, gn_hvp, init_latent
from pslf.oracle import dense_gauss_newton, dense_jacobian
from pslf.second_order import jtvp, jvp
from pslf.synthetic import low_rank_matrix

R, _ = low_rank_matrix(6, 8, 2, 0.5, seed=1)
X = init_latent(R.num_users, R.num_items, 3, seed=1)
cfg = HvpConfig(lam=0.05, gamma=10.0)
rng = np.random.default_rng(0)
v = rng.standard_normal(X.size)

J = dense_jacobian(X, R)
print("J shape", J.shape)
print("jvp  err", np.abs(jvp(X, v, R) - J @ v).max())
w = rng.standard_normal(R.num_entries)
print("jtvp err", np.abs(jtvp(X, w, R) - J.T @ w).max())
print("hvp  err", np.abs(gn_hvp(X, v, R, cfg) - dense_gauss_newton(X, R, cfg) @ v).max())

# the matrix-free product costs O(|K| f); the dense one O((|U|+|I|)^2 f^2)
for n in (20, 40, 60):
    R, _ = low_rank_matrix(n, n, 3, 0.2, seed=n)
    X = init_latent(n, n, 5, seed=n)
    v = rng.standard_normal(X.size)
    t = time.perf_counter()
    gn_hvp(X, v, R, cfg)
    t_free = time.perf_counter() - t
    t = time.perf_counter()
    dense_gauss_newton(X, R, cfg) @ v
    t_dense = time.perf_counter() - t
    print(f"n={n:3d}  matrix-free {1e3 * t_free:7.2f} ms   dense {1e3 * t_dense:8.2f} ms")
