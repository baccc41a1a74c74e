"""Convergence and mixing diagnostics for stored sampler draws."""

import numpy as np

__all__ = ["psrf", "split_psrf", "ess"]


def psrf(chains):
    """Gelman-Rubin potential scale reduction factor.

    ``chains`` is an (m, t) array of m sub-chains of equal length t. A
    zero-variance collection returns 1 by convention.
    """
    chains = np.asarray(chains, dtype=np.float64)
    if chains.ndim != 2 or chains.shape[0] < 2 or chains.shape[1] < 2:
        raise ValueError("need at least two sub-chains of length >= 2")
    m, t = chains.shape
    means = chains.mean(axis=1)
    within = chains.var(axis=1, ddof=1).mean()
    between = t * means.var(ddof=1)
    if within == 0.0:
        return 1.0
    var_hat = (t - 1) / t * within + between / t
    return float(np.sqrt(var_hat / within))


def split_psrf(draws, n_splits=4):
    """PSRF from one chain split into consecutive equal sub-chains."""
    draws = np.asarray(draws, dtype=np.float64)
    t = draws.shape[0] // n_splits
    if t < 2:
        raise ValueError(f"chain too short to split into {n_splits} pieces")
    return psrf(draws[: n_splits * t].reshape(n_splits, t))


def ess(draws):
    """Effective sample size via Geyer's initial positive sequence.

    Autocorrelations are summed in adjacent pairs until a pair sum goes
    non-positive. A constant chain is defined to have ESS equal to its
    length.
    """
    x = np.asarray(draws, dtype=np.float64)
    n = x.shape[0]
    if n < 10:
        raise ValueError("need at least 10 draws")
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        return float(n)
    # FFT autocovariances, normalized to autocorrelations.
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / acov[0]

    tau = -rho[0]  # running sum 2*sum(pair sums) - rho_0, with rho_0 = 1
    k = 0
    while 2 * k + 1 < n:
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        k += 1
    tau = max(tau, 1.0 / n)
    return float(n / tau)
