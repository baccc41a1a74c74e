"""Global and local Bayesian tests and group prediction from a fitted chain.

The global decision thresholds the posterior probability of the
alternative (the mean of the stored hypothesis indicator). Local decisions
replace point nulls with interval nulls: edge l is flagged when the
posterior probability that its association coefficient exceeds ``epsilon``
passes the threshold.
"""

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import logsumexp

from .graphs import pair_indices
from .model import PROB_FLOOR

__all__ = [
    "TestReport",
    "global_test",
    "local_tests",
    "bayes_fdr_threshold",
    "predict_group",
    "matrix_form",
    "build_report",
]

DEFAULT_EPSILON = 0.1
DEFAULT_THRESHOLD = 0.9


@dataclass
class TestReport:
    global_pr_h1: float
    global_decision: bool
    global_mc_se: float
    local_pr: np.ndarray
    decisions: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    global_threshold: float = DEFAULT_THRESHOLD
    local_threshold: float = DEFAULT_THRESHOLD
    bayes_fdr_cutoff: float | None = None
    baselines: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["local_pr"] = np.asarray(self.local_pr).tolist()
        d["decisions"] = np.asarray(self.decisions).astype(int).tolist()
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def global_test(chain, threshold=DEFAULT_THRESHOLD):
    """Posterior probability of the alternative and the reject decision.

    Also returns a Monte Carlo standard error for the probability (batch
    means over 20 batches); the error carries no decision semantics.
    """
    draws = np.asarray(chain.test_indicator, dtype=np.float64)
    prob = float(draws.mean())
    n_batches = min(20, draws.size)
    batches = np.array_split(draws, n_batches)
    bmeans = np.array([b.mean() for b in batches])
    mc_se = float(bmeans.std(ddof=1) / np.sqrt(n_batches)) if n_batches > 1 else 0.0
    return prob, prob > threshold, mc_se


def local_tests(chain, epsilon=DEFAULT_EPSILON, threshold=DEFAULT_THRESHOLD):
    """Per-edge posterior probabilities that the association exceeds
    ``epsilon``, with reject flags above ``threshold``."""
    rho = np.asarray(chain.association, dtype=np.float64)
    local_pr = (rho > epsilon).mean(axis=0)
    return local_pr, local_pr > threshold


def bayes_fdr_threshold(local_pr, target_fdr):
    """Smallest cutoff c with expected false discovery rate of the set
    {l : local_pr[l] > c} at most ``target_fdr``; None when no nonempty
    rejection set qualifies."""
    if not (0.0 < target_fdr < 1.0):
        raise ValueError("target_fdr must be in (0, 1)")
    probs = np.asarray(local_pr, dtype=np.float64)
    if probs.size == 0:
        return None
    best = None
    for cut in np.concatenate(([0.0], np.unique(probs))):
        rejected = probs > cut
        if not rejected.any():
            continue
        if np.mean(1.0 - probs[rejected]) <= target_fdr:
            best = float(cut)
            break  # candidates ascend, first hit is smallest
    return best


def predict_group(chain, networks):
    """Posterior-predictive probability of group 2 for each network row.

    Averages the per-draw class probability over the stored component-level
    parameter draws, evaluating each mixture likelihood in log space.
    """
    params = chain.predict_params
    if params is None:
        raise ValueError("chain was stored without prediction parameters")
    nets = np.atleast_2d(np.asarray(networks, dtype=np.float64))
    probs2 = np.zeros(nets.shape[0])
    n_draws = params["p_y1"].shape[0]
    for s in range(n_draws):
        table = np.clip(params["edge_probs"][s], PROB_FLOOR, 1.0 - PROB_FLOOR)
        logp = np.log(table)
        log1mp = np.log1p(-table)
        comp_loglik = nets @ (logp - log1mp).T + log1mp.sum(axis=1)[None, :]
        log_mix = np.log(np.clip(params["mixing"][s], PROB_FLOOR, None))
        ll_g = np.stack(
            [logsumexp(comp_loglik + log_mix[y][None, :], axis=1) for y in range(2)],
            axis=1,
        )
        p1 = params["p_y1"][s]
        joint = ll_g + np.log([p1, 1.0 - p1])
        probs2 += np.exp(joint[:, 1] - logsumexp(joint, axis=1))
    return probs2 / n_draws


def matrix_form(values, v, fill=0.0):
    """Re-arrange a per-edge vector into the symmetric v-by-v matrix."""
    rows, cols = pair_indices(v)
    m = np.full((v, v), fill, dtype=np.float64)
    m[rows, cols] = values
    m[cols, rows] = values
    return m


def build_report(
    chain,
    epsilon=DEFAULT_EPSILON,
    global_threshold=DEFAULT_THRESHOLD,
    local_threshold=DEFAULT_THRESHOLD,
    target_fdr=None,
    baselines=None,
):
    prob, decision, mc_se = global_test(chain, global_threshold)
    local_pr, flags = local_tests(chain, epsilon, local_threshold)
    cutoff = bayes_fdr_threshold(local_pr, target_fdr) if target_fdr else None
    return TestReport(
        global_pr_h1=prob,
        global_decision=decision,
        global_mc_se=mc_se,
        local_pr=local_pr,
        decisions=flags,
        epsilon=epsilon,
        global_threshold=global_threshold,
        local_threshold=local_threshold,
        bayes_fdr_cutoff=cutoff,
        baselines=baselines or {},
    )
