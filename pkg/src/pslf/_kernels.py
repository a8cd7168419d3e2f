"""Compiled per-rating update loops for the first-order baselines.

Each kernel walks the known entries in ``order`` and updates the factor
matrices in place. User and item rows are updated simultaneously from their
pre-step values.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def sgd_epoch(XU, XI, users, items, ratings, order, lr, lam):
    f = XU.shape[1]
    for k in order:
        u = users[k]
        i = items[k]
        pred = 0.0
        for d in range(f):
            pred += XU[u, d] * XI[i, d]
        e = ratings[k] - pred
        for d in range(f):
            xu = XU[u, d]
            xi = XI[i, d]
            XU[u, d] = xu + lr * (e * xi - lam * xu)
            XI[i, d] = xi + lr * (e * xu - lam * xi)


@njit(cache=True)
def sam_epoch(XU, XI, users, items, ratings, order, lr, lam, rho):
    f = XU.shape[1]
    pu = np.empty(f)
    pi = np.empty(f)
    for k in order:
        u = users[k]
        i = items[k]
        pred = 0.0
        for d in range(f):
            pred += XU[u, d] * XI[i, d]
        e = ratings[k] - pred
        # ascent direction on the touched slice: +grad = -(e x_other - lam x_self)
        gnorm2 = 0.0
        for d in range(f):
            gu = lam * XU[u, d] - e * XI[i, d]
            gi = lam * XI[i, d] - e * XU[u, d]
            pu[d] = gu
            pi[d] = gi
            gnorm2 += gu * gu + gi * gi
        if rho > 0.0 and gnorm2 > 0.0:
            scale = rho / np.sqrt(gnorm2)
            for d in range(f):
                pu[d] = XU[u, d] + scale * pu[d]
                pi[d] = XI[i, d] + scale * pi[d]
        else:
            for d in range(f):
                pu[d] = XU[u, d]
                pi[d] = XI[i, d]
        pred = 0.0
        for d in range(f):
            pred += pu[d] * pi[d]
        e = ratings[k] - pred
        for d in range(f):
            XU[u, d] = XU[u, d] + lr * (e * pi[d] - lam * pu[d])
            XI[i, d] = XI[i, d] + lr * (e * pu[d] - lam * pi[d])


@njit(cache=True)
def adam_epoch(XU, XI, users, items, ratings, order, lr, lam, beta1, beta2, eps,
               MU, VU, MI, VI, TU, TI):
    """Adam with per-row step counters, so bias correction counts the updates
    a row has actually received."""
    f = XU.shape[1]
    for k in order:
        u = users[k]
        i = items[k]
        pred = 0.0
        for d in range(f):
            pred += XU[u, d] * XI[i, d]
        e = ratings[k] - pred
        TU[u] += 1
        TI[i] += 1
        bu1 = 1.0 - beta1 ** TU[u]
        bu2 = 1.0 - beta2 ** TU[u]
        bi1 = 1.0 - beta1 ** TI[i]
        bi2 = 1.0 - beta2 ** TI[i]
        for d in range(f):
            xu = XU[u, d]
            xi = XI[i, d]
            gu = lam * xu - e * xi
            gi = lam * xi - e * xu
            MU[u, d] = beta1 * MU[u, d] + (1.0 - beta1) * gu
            VU[u, d] = beta2 * VU[u, d] + (1.0 - beta2) * gu * gu
            MI[i, d] = beta1 * MI[i, d] + (1.0 - beta1) * gi
            VI[i, d] = beta2 * VI[i, d] + (1.0 - beta2) * gi * gi
            XU[u, d] = xu - lr * (MU[u, d] / bu1) / (np.sqrt(VU[u, d] / bu2) + eps)
            XI[i, d] = xi - lr * (MI[i, d] / bi1) / (np.sqrt(VI[i, d] / bi2) + eps)
