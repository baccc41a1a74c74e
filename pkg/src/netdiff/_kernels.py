"""Jit-compiled inner loops of the Gibbs sweep."""

import numpy as np
from numba import njit


@njit(cache=True)
def _loglik_lam(theta, pair_prods, c1, w):
    r_max = theta.size
    lam = np.empty(r_max)
    acc = 1.0
    for r in range(r_max):
        acc *= theta[r]
        lam[r] = 1.0 / acc
    total = 0.0
    for l in range(pair_prods.shape[0]):
        d = 0.0
        for r in range(r_max):
            d += pair_prods[l, r] * lam[r]
        total += c1[l] * d - 0.5 * w[l] * d * d
    return total


@njit(cache=True)
def _logpost_theta(theta, m, log_t, pair_prods, c1, w, a1, a2):
    old = theta[m]
    t = np.exp(log_t)
    theta[m] = t
    shape = a1 if m == 0 else a2
    val = shape * log_t - t + _loglik_lam(theta, pair_prods, c1, w)
    theta[m] = old
    return val


@njit(cache=True)
def interweave_theta(theta, pair_prods, c1, w, a1, a2, rng):
    """Slice-sample each shrinkage factor in the whitened parametrization.

    c1 holds kappa - w * z per edge; pair_prods the per-column products of
    whitened coordinates over node pairs.
    """
    width = 1.0
    for m in range(theta.size):
        x0 = np.log(theta[m])
        logy = _logpost_theta(theta, m, x0, pair_prods, c1, w, a1, a2) + np.log(rng.random())
        lo = x0 - width * rng.random()
        hi = lo + width
        for _ in range(20):
            if _logpost_theta(theta, m, lo, pair_prods, c1, w, a1, a2) < logy:
                break
            lo -= width
        for _ in range(20):
            if _logpost_theta(theta, m, hi, pair_prods, c1, w, a1, a2) < logy:
                break
            hi += width
        while True:
            x1 = lo + (hi - lo) * rng.random()
            if _logpost_theta(theta, m, x1, pair_prods, c1, w, a1, a2) >= logy:
                theta[m] = np.exp(x1)
                break
            if x1 < x0:
                lo = x1
            else:
                hi = x1


@njit(cache=True)
def mig_gamma_update(theta, sq, v, a1, a2, rng):
    """Standard gamma full conditionals of the shrinkage factors given the
    per-column sums of squares of the coordinates."""
    r_max = theta.size
    for m in range(r_max):
        shape = (a1 if m == 0 else a2) + 0.5 * v * (r_max - m)
        rate = 1.0
        acc = 1.0
        for r in range(r_max):
            acc *= theta[r]
            if r >= m:
                rate += 0.5 * (acc / theta[m]) * sq[r]
        theta[m] = rng.gamma(shape, 1.0 / rate)


@njit(cache=True)
def update_coords_rows(coords, lam, w, kappa, z, edge_idx, other, rng):
    """Sequential Gaussian row updates of one component's coordinates.

    w and kappa are the per-edge Polya-gamma and centered-edge aggregates
    over the component's member networks.
    """
    v, r_max = coords.shape
    prec = np.empty((r_max, r_max))
    b = np.empty(r_max)
    for node in range(v):
        for r in range(r_max):
            b[r] = 0.0
            for s in range(r_max):
                prec[r, s] = 0.0
        for j in range(v - 1):
            l = edge_idx[node, j]
            u = other[node, j]
            wl = w[l]
            cl = kappa[l] - wl * z[l]
            for r in range(r_max):
                xr = coords[u, r]
                b[r] += cl * xr
                wxr = wl * xr
                for s in range(r_max):
                    prec[r, s] += wxr * coords[u, s]
        for r in range(r_max):
            prec[r, r] += 1.0 / lam[r]
        chol = np.linalg.cholesky(prec)
        mean = np.linalg.solve(prec, b)
        eps = rng.standard_normal(r_max)
        noise = np.linalg.solve(chol.T, eps)
        for r in range(r_max):
            coords[node, r] = mean[r] + noise[r]
