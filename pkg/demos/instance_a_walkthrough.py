"""
One second-order step on a three-rating matrix
==============================================

Two users, two items, three known ratings and a single latent dimension.
Small enough to check every number by hand.
"""
import numpy as np

from pslf import HvpConfig, LatentState, RatingTuple, build_hdi, density, residuals
from pslf import assemble_gradient, cg_solve, objective
from pslf.oracle import dense_gauss_newton
from pslf.second_order import GaussNewtonOperator

ratings = [RatingTuple("u1", "i1", 5.0), RatingTuple("u1", "i2", 3.0),
           RatingTuple("u2", "i1", 4.0)]
R = build_hdi(ratings)
print(f"|U|={R.num_users} |I|={R.num_items} |K|={R.num_entries} density={density(R):.2%}")

# x_u1=1, x_u2=2, x_i1=x_i2=1, so the predictions are 1, 1 and 2
X = LatentState(np.array([[1.0], [2.0]]), np.array([[1.0], [1.0]]))
e = residuals(X, R)
print("errors", e)                                   # [4, 2, 2]
print("objective", objective(X, R, lam=0.0))          # 0.5 * (16 + 4 + 4) = 12

# parameters are laid out [x_u1, x_u2, x_i1, x_i2]; the gradient is stored negated
print("-g", assemble_gradient(X, e, R, lam=0.0))      # [6, 2, 8, 2]

# the damped Gauss-Newton matrix, both matrix-free and dense
cfg = HvpConfig(lam=0.0, gamma=1.0)
print(dense_gauss_newton(X, R, cfg))
op = GaussNewtonOperator(X, R, cfg)
print("hvp(ones)", op(np.ones(4)))

# one update: solve (G + gamma I) dX = -g with CG, then step
res = cg_solve(op, assemble_gradient(X, e, R, 0.0), tol=1e-12, max_iters=4)
print("dX", res.delta, "in", res.iterations, "CG iterations")
X.add_(res.delta)
print("objective after one step", objective(X, R, 0.0))
