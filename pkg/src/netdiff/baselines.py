"""Comparison procedures: per-edge Fisher exact tests with p-value
calibration and Benjamini-Hochberg control, and a one-way MANOVA on the
four network summary statistics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import f as f_dist

from .graphs import SUMMARY_NAMES, summary_matrix

__all__ = [
    "ContingencyTable2x2",
    "edge_contingency_tables",
    "fisher_exact_two_sided",
    "calibrate_p",
    "benjamini_hochberg",
    "manova_summary_test",
    "fisher_edge_scan",
]

_TIE_REL_TOL = 1e-7


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Counts (a, b; c, d): rows are groups, columns edge presence/absence."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("contingency counts must be non-negative")


def _log_hypergeom_pmf(x, r1, c1, n):
    return (
        gammaln(r1 + 1) - gammaln(x + 1) - gammaln(r1 - x + 1)
        + gammaln(n - r1 + 1) - gammaln(c1 - x + 1) - gammaln(n - r1 - c1 + x + 1)
        - (gammaln(n + 1) - gammaln(c1 + 1) - gammaln(n - c1 + 1))
    )


def fisher_exact_two_sided(table):
    """Two-sided Fisher exact p-value by the probability-mass criterion.

    Sums hypergeometric probabilities of all tables with the observed
    margins whose probability is at most the observed one (ties compared
    with a small relative tolerance). Degenerate margins give p = 1.
    """
    t = table if isinstance(table, ContingencyTable2x2) else ContingencyTable2x2(*np.ravel(table))
    r1, r2 = t.a + t.b, t.c + t.d
    c1 = t.a + t.c
    n = r1 + r2
    if r1 == 0 or r2 == 0 or c1 == 0 or c1 == n:
        return 1.0
    lo = max(0, r1 - (n - c1))
    hi = min(r1, c1)
    xs = np.arange(lo, hi + 1)
    logpmf = _log_hypergeom_pmf(xs, r1, c1, n)
    pmf = np.exp(logpmf - logpmf.max())
    pmf /= pmf.sum()
    observed = pmf[t.a - lo]
    keep = pmf <= observed * (1.0 + _TIE_REL_TOL)
    return float(min(1.0, pmf[keep].sum()))


def calibrate_p(p):
    """Map a p-value to a probability-like score: 1 / (1 - e p log p) for
    p < 1/e, and 0.5 otherwise."""
    if p <= 0.0:
        p = np.finfo(float).tiny
    if p > 1.0:
        raise ValueError("p-values cannot exceed 1")
    if p >= 1.0 / math.e:
        return 0.5
    return 1.0 / (1.0 - math.e * p * math.log(p))


def benjamini_hochberg(pvals, q):
    """Step-up rule: reject all p-values at most the largest p_(i) with
    p_(i) <= i q / m. Returns a boolean reject mask."""
    if not (0.0 < q < 1.0):
        raise ValueError("q must be in (0, 1)")
    p = np.asarray(pvals, dtype=np.float64)
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    below = ranked <= q * (np.arange(1, p.size + 1) / p.size)
    if not below.any():
        return np.zeros(p.size, dtype=bool)
    cut = ranked[np.nonzero(below)[0][-1]]
    return p <= cut


def edge_contingency_tables(dataset):
    """Per-edge 2x2 tables of group by edge presence, as an (L, 4) array
    ordered (a, b, c, d)."""
    g1 = dataset.networks[dataset.groups == 1]
    g2 = dataset.networks[dataset.groups == 2]
    a = g1.sum(axis=0)
    c = g2.sum(axis=0)
    return np.stack([a, g1.shape[0] - a, c, g2.shape[0] - c], axis=1).astype(np.int64)


def fisher_edge_scan(dataset, q=0.1):
    """All per-edge Fisher tests plus BH rejections and calibrated scores."""
    tables = edge_contingency_tables(dataset)
    pvals = np.array([fisher_exact_two_sided(ContingencyTable2x2(*row)) for row in tables])
    rejected = benjamini_hochberg(pvals, q)
    calibrated = np.array([calibrate_p(p) for p in pvals])
    return pvals, rejected, calibrated


def manova_summary_test(dataset, alpha=0.1):
    """One-way MANOVA across the two groups on the summary-statistic
    vectors, via Wilks' lambda with the two-group exact F transform.

    Statistics that are undefined (nan) for some network, or that make the
    pooled within-group scatter singular, are dropped and reported.

    Returns (statistic, p_value, reject, dropped_names).
    """
    stats = summary_matrix(dataset.networks, dataset.blocks)
    names = list(SUMMARY_NAMES)
    finite = np.isfinite(stats).all(axis=0)
    dropped = [n for n, ok in zip(names, finite) if not ok]
    stats = stats[:, finite]
    names = [n for n, ok in zip(names, finite) if ok]

    y = dataset.groups
    while True:
        if stats.shape[1] == 0:
            raise ValueError("no usable summary statistics remain")
        x1 = stats[y == 1]
        x2 = stats[y == 2]
        mu1, mu2, mu = x1.mean(axis=0), x2.mean(axis=0), stats.mean(axis=0)
        within = (x1 - mu1).T @ (x1 - mu1) + (x2 - mu2).T @ (x2 - mu2)
        between = len(x1) * np.outer(mu1 - mu, mu1 - mu) + len(x2) * np.outer(mu2 - mu, mu2 - mu)
        sign, logdet_w = np.linalg.slogdet(within)
        cond_ok = sign > 0 and np.linalg.cond(within) < 1e10
        if cond_ok:
            break
        # Drop the statistic most collinear with the rest (smallest
        # contribution to the scatter) and retry.
        corr = np.corrcoef(stats.T)
        worst = int(np.nanargmax(np.abs(corr - np.eye(len(names))).sum(axis=0)))
        dropped.append(names.pop(worst))
        stats = np.delete(stats, worst, axis=1)

    p = stats.shape[1]
    n = stats.shape[0]
    _, logdet_t = np.linalg.slogdet(within + between)
    wilks = math.exp(logdet_w - logdet_t)
    df2 = n - p - 1
    if df2 <= 0:
        raise ValueError("need more networks per group than summary statistics")
    f_stat = (1.0 - wilks) / wilks * df2 / p
    p_value = float(f_dist.sf(f_stat, p, df2))
    return f_stat, p_value, p_value < alpha, dropped
