"""Generative model for a population of labelled binary networks.

Each network, given its group label y and a latent component h, has
conditionally independent edges with probabilities

    pi_l = logistic(z_l + sum_r lambda_r * x[v,r] * x[u,r]),

where (v, u) is the node pair behind edge index l, z is a log-odds
vector shared by all components, and (x, lambda) are component-specific
latent coordinates and non-negative weights. The component is drawn from
group-specific mixing probabilities; those mixing vectors are the only
group-dependent quantity, so equality of the two group distributions is
equality of the mixing vectors.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .errors import FormatError
from .graphs import n_pairs, pair_indices

__all__ = [
    "ComponentFactors",
    "MixtureModelState",
    "component_edge_probs",
    "mixture_log_pmf",
    "mixture_pmf",
    "group_edge_probs",
    "unconditional_edge_probs",
    "cramers_v",
    "cramers_v_all",
    "sample_network",
    "sample_dataset",
    "enumerate_pmf",
    "factors_from_logits",
    "PROB_FLOOR",
]

# Edge probabilities are clamped away from {0, 1} before any log.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ComponentFactors:
    """Latent coordinates (v, r) and non-negative rank weights (r,)."""

    x: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)
        if x.ndim != 2:
            raise FormatError("coordinates must be a (v, r) matrix")
        if w.shape != (x.shape[1],):
            raise FormatError(
                f"got {w.shape[0]} weights for rank {x.shape[1]} coordinates"
            )
        if np.any(w < 0):
            raise FormatError("rank weights must be non-negative")

    @property
    def v(self):
        return self.x.shape[0]

    @property
    def rank(self):
        return self.x.shape[1]

    def pair_logits(self):
        """Length v*(v-1)/2 vector of weighted dot products over node pairs."""
        rows, cols = pair_indices(self.v)
        scaled = self.x * self.weights
        return np.einsum("ij,ij->i", scaled[rows], self.x[cols])


@dataclass(frozen=True)
class MixtureModelState:
    """One complete parameter state of the mixture model.

    p_y1:           probability that a subject belongs to group 1
    mixing:         (2, H) row-stochastic matrix; row y-1 holds group y's
                    component probabilities
    shared_mixing:  (H,) mixing vector shared by both groups under the null
    test_indicator: 0 for the null (groups identical), 1 for the alternative
    base_logits:    (L,) log-odds shared by every component
    components:     H ComponentFactors
    assignments:    optional (n,) component labels of observed networks
    """

    p_y1: float
    mixing: np.ndarray
    shared_mixing: np.ndarray
    test_indicator: int
    base_logits: np.ndarray
    components: tuple
    assignments: np.ndarray | None = field(default=None)

    def __post_init__(self):
        mixing = np.asarray(self.mixing, dtype=np.float64)
        shared = np.asarray(self.shared_mixing, dtype=np.float64)
        z = np.asarray(self.base_logits, dtype=np.float64)
        comps = tuple(self.components)
        object.__setattr__(self, "mixing", mixing)
        object.__setattr__(self, "shared_mixing", shared)
        object.__setattr__(self, "base_logits", z)
        object.__setattr__(self, "components", comps)
        h = len(comps)
        if h < 1:
            raise FormatError("need at least one mixture component")
        if mixing.shape != (2, h):
            raise FormatError(f"mixing must be (2, {h}), got {mixing.shape}")
        if shared.shape != (h,):
            raise FormatError(f"shared_mixing must be ({h},), got {shared.shape}")
        if not (0.0 < self.p_y1 < 1.0):
            raise FormatError("p_y1 must lie strictly inside (0, 1)")
        if not np.allclose(mixing.sum(axis=1), 1.0):
            raise FormatError("each mixing vector must sum to 1")
        if self.test_indicator not in (0, 1):
            raise FormatError("test_indicator must be 0 or 1")
        if self.test_indicator == 0 and not (
            np.allclose(mixing[0], shared) and np.allclose(mixing[1], shared)
        ):
            raise FormatError("under the null both mixing vectors must equal shared_mixing")
        v = comps[0].v
        if any(c.v != v for c in comps):
            raise FormatError("all components must share the node count")
        if z.shape != (n_pairs(v),):
            raise FormatError(
                f"base_logits must have length {n_pairs(v)} for v={v}, got {z.shape[0]}"
            )

    @property
    def v(self):
        return self.components[0].v

    @property
    def h(self):
        return len(self.components)

    @property
    def n_edges(self):
        return self.base_logits.shape[0]

    def p_y(self, y):
        return self.p_y1 if y == 1 else 1.0 - self.p_y1

    def edge_prob_table(self):
        """(H, L) matrix of per-component edge probabilities."""
        return np.stack(
            [component_edge_probs(self.base_logits, c) for c in self.components]
        )


def component_edge_probs(base_logits, factors):
    """Edge probability vector logistic(z + weighted latent dot products)."""
    z = np.asarray(base_logits, dtype=np.float64)
    if z.shape != (n_pairs(factors.v),):
        raise FormatError(
            f"base_logits length {z.shape[0]} does not match v={factors.v}"
        )
    probs = expit(z + factors.pair_logits())
    return np.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)


def _log_bernoulli_table(state):
    """(H, L) log pi and log(1 - pi) stacked as a pair."""
    table = state.edge_prob_table()
    return np.log(table), np.log1p(-table)


def mixture_log_pmf(edges, y, state):
    """Log probability of one edge-vector configuration given its group.

    Accumulated in log space with a log-sum-exp across components.
    """
    a = np.asarray(edges, dtype=np.float64)
    if a.shape != (state.n_edges,):
        raise FormatError(f"edge vector length {a.shape} does not match state")
    logp, log1mp = _log_bernoulli_table(state)
    comp_loglik = logp @ a + log1mp @ (1.0 - a)
    log_mix = np.log(np.clip(state.mixing[y - 1], PROB_FLOOR, None))
    return float(logsumexp(log_mix + comp_loglik))


def mixture_pmf(edges, y, state):
    """Probability of one configuration given its group."""
    return float(np.exp(mixture_log_pmf(edges, y, state)))


def group_edge_probs(state, y):
    """Marginal edge probabilities within group y: mixing-weighted average
    of the component edge probability vectors."""
    return state.mixing[y - 1] @ state.edge_prob_table()


def unconditional_edge_probs(state):
    """Marginal edge probabilities with the group itself integrated out."""
    return state.p_y1 * group_edge_probs(state, 1) + (1.0 - state.p_y1) * group_edge_probs(state, 2)


def cramers_v_all(state):
    """Association between group label and each edge indicator, in [0, 1].

    Zero exactly when the two groups share a mixing vector; computed from
    the closed-form marginal edge probabilities.
    """
    bar1 = group_edge_probs(state, 1)
    bar2 = group_edge_probs(state, 2)
    return cramers_v_from_marginals(bar1, bar2, state.p_y1)


def cramers_v_from_marginals(bar1, bar2, p_y1):
    p1, p2 = p_y1, 1.0 - p_y1
    marg = p1 * bar1 + p2 * bar2
    marg = np.clip(marg, PROB_FLOOR, 1.0 - PROB_FLOOR)
    rho2 = np.zeros_like(marg)
    for w, bar in ((p1, bar1), (p2, bar2)):
        rho2 += w * (bar - marg) ** 2 / marg
        rho2 += w * ((1.0 - bar) - (1.0 - marg)) ** 2 / (1.0 - marg)
    return np.sqrt(np.maximum(rho2, 0.0))


def cramers_v(state, edge_index):
    """Scalar association for one edge index."""
    return float(cramers_v_all(state)[edge_index])


def sample_network(state, y, rng):
    """Draw one network for group y; returns (edge vector, component index).

    The component index is 1-based to match group labels elsewhere.
    """
    h = rng.choice(state.h, p=state.mixing[y - 1])
    probs = component_edge_probs(state.base_logits, state.components[h])
    edges = (rng.random(state.n_edges) < probs).astype(np.uint8)
    return edges, h + 1


def sample_dataset(state, n, rng, groups=None):
    """Draw n (group, network) pairs; groups may be fixed in advance."""
    if groups is None:
        groups = np.where(rng.random(n) < state.p_y1, 1, 2)
    else:
        groups = np.asarray(groups)
    nets = np.empty((n, state.n_edges), dtype=np.uint8)
    comps = np.empty(n, dtype=np.int64)
    for i in range(n):
        nets[i], comps[i] = sample_network(state, int(groups[i]), rng)
    return nets, groups, comps


MAX_ENUMERATION_NODES = 5


def enumerate_pmf(state, y):
    """Exhaustive pmf over all 2^L configurations for group y.

    Brute-force oracle for the marginal and association formulas; refuses
    node counts above 5 (table size 1024).
    """
    if state.v > MAX_ENUMERATION_NODES:
        raise FormatError(
            f"enumeration needs v <= {MAX_ENUMERATION_NODES}, got v={state.v}"
        )
    length = state.n_edges
    configs = ((np.arange(2**length)[:, None] >> np.arange(length)) & 1).astype(np.float64)
    logp, log1mp = _log_bernoulli_table(state)
    comp_loglik = configs @ logp.T + (1.0 - configs) @ log1mp.T
    log_mix = np.log(np.clip(state.mixing[y - 1], PROB_FLOOR, None))
    probs = np.exp(logsumexp(log_mix[None, :] + comp_loglik, axis=1))
    return configs.astype(np.uint8), probs


def factors_from_logits(pair_logit_matrix):
    """ComponentFactors reproducing an arbitrary symmetric pair-logit matrix.

    Only the strict lower triangle of x diag(w) x^T enters the model, so the
    diagonal is free: shifting it by a constant makes the matrix positive
    semidefinite, and its eigendecomposition gives non-negative weights.
    """
    m = np.asarray(pair_logit_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
        raise FormatError("pair-logit matrix must be symmetric")
    eigvals = np.linalg.eigvalsh(m)
    shift = max(0.0, -float(eigvals.min())) + 1e-9
    w, x = np.linalg.eigh(m + shift * np.eye(m.shape[0]))
    w = np.maximum(w, 0.0)
    return ComponentFactors(x=x, weights=w)
