"""Blocked Gibbs sampler for the dependent mixture of low-rank logistic
factorizations, with Polya-gamma augmentation for every logistic term.

One sweep updates, in order:

1. the group-1 probability from its conjugate Beta full conditional;
2. every component assignment from its categorical full conditional;
3. the shared log-odds vector, the latent coordinate rows of every
   component, and the multiplicative-gamma shrinkage factors, all through
   Polya-gamma auxiliary draws (Gaussian and gamma full conditionals);
4. the hypothesis indicator from its collapsed Bernoulli full conditional,
   with the Dirichlet-multinomial marginals evaluated via log multivariate
   beta functions;
5. the mixing vectors: a single shared Dirichlet draw under the null,
   independent per-group Dirichlet draws under the alternative.

Rank weights are carried implicitly: coordinate column r of component h
has prior variance lambda_r = prod_{m<=r} 1/theta_m, so the shrinkage
factors theta keep their standard gamma full conditionals and the reported
weights stay non-negative and stochastically decreasing in r.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit, gammaln

from ._kernels import interweave_theta, mig_gamma_update, update_coords_rows
from .chains import PosteriorChain
from .errors import SamplerError
from .graphs import n_pairs, pair_indices, pairs_touching, summary_stats, SUMMARY_NAMES
from .model import PROB_FLOOR, cramers_v_from_marginals
from .pg import pg_draw, pg_draw_series

__all__ = [
    "Hyperparameters",
    "GibbsConfig",
    "GibbsState",
    "init_state",
    "gibbs_step",
    "run_chain",
    "h1_conditional_prob",
    "log_multivariate_beta",
]

_FREQ_CLAMP = (0.05, 0.95)  # empirical edge frequency clamp for the z init


@dataclass(frozen=True)
class Hyperparameters:
    """Prior settings. Defaults follow the V=20 simulation regime."""

    h_max: int = 10
    r_max: int = 10
    beta_a: float = 0.5
    beta_b: float = 0.5
    z_mean: float = 0.0
    z_var: float = 10.0
    mig_a1: float = 2.5
    mig_a2: float = 3.5
    prior_h1: float = 0.5
    dirichlet_conc: float | None = None

    def __post_init__(self):
        if self.dirichlet_conc is None:
            object.__setattr__(self, "dirichlet_conc", 1.0 / self.h_max)
        if not (0.0 < self.prior_h1 < 1.0):
            raise ValueError("prior_h1 must be in (0, 1)")
        for name in ("h_max", "r_max", "beta_a", "beta_b", "z_var", "mig_a1", "mig_a2", "dirichlet_conc"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GibbsConfig:
    n_iter: int = 5000
    burn_in: int = 1000
    thin: int = 1
    seed: int = 0
    n_chains: int = 1
    pg_exact: bool = True  # False selects the truncated-series fallback
    store_predictive: bool = True
    predict_draws: int = 200

    def __post_init__(self):
        if not (0 <= self.burn_in < self.n_iter):
            raise ValueError("burn_in must be smaller than n_iter")
        if self.thin < 1 or self.n_chains < 1:
            raise ValueError("thin and n_chains must be >= 1")

    @property
    def n_stored(self):
        return (self.n_iter - self.burn_in) // self.thin

    def to_dict(self):
        return asdict(self)


@dataclass
class GibbsState:
    """Mutable sampler state; weights are derived from the shrink factors."""

    p_y1: float
    mixing: np.ndarray        # (2, H)
    shared_mixing: np.ndarray  # (H,)
    test_indicator: int
    base_logits: np.ndarray   # (L,)
    coords: np.ndarray        # (H, V, R), column r prior variance lambda_r
    shrink: np.ndarray        # (H, R) gamma factors theta
    assignments: np.ndarray   # (n,) in 0..H-1

    @property
    def weights(self):
        """(H, R) rank weights lambda = 1 / cumprod(theta)."""
        return 1.0 / np.cumprod(self.shrink, axis=1)

    def pair_contributions(self):
        """(H, L) component-specific additions to the shared log-odds."""
        rows, cols = pair_indices(self.coords.shape[1])
        return np.einsum("hir,hir->hi", self.coords[:, rows, :], self.coords[:, cols, :])

    def edge_prob_table(self):
        probs = expit(self.base_logits[None, :] + self.pair_contributions())
        return np.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)


def log_multivariate_beta(alpha):
    """log B(alpha) = sum(lgamma(alpha)) - lgamma(sum(alpha))."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(np.sum(gammaln(alpha)) - gammaln(alpha.sum()))


def h1_conditional_prob(counts_g1, counts_g2, hyper):
    """Full conditional probability of the alternative given the component
    occupancy counts of each group, evaluated in log space."""
    c1 = np.asarray(counts_g1, dtype=np.float64)
    c2 = np.asarray(counts_g2, dtype=np.float64)
    alpha = np.full(c1.shape, hyper.dirichlet_conc)
    log_odds = (
        math.log(hyper.prior_h1) - math.log1p(-hyper.prior_h1)
        + log_multivariate_beta(alpha + c1)
        + log_multivariate_beta(alpha + c2)
        - log_multivariate_beta(alpha)
        - log_multivariate_beta(alpha + c1 + c2)
    )
    return float(expit(log_odds))


def _dirichlet(alpha, rng):
    # Gamma construction with a floor: numpy's dirichlet can emit exact
    # zeros (or nan) for concentrations this small.
    g = rng.gamma(np.asarray(alpha, dtype=np.float64), 1.0)
    g = np.clip(g, 1e-300, None)
    return g / g.sum()


def _draw_shrink_prior(h, r, hyper, rng):
    theta = np.empty((h, r))
    theta[:, 0] = rng.gamma(hyper.mig_a1, 1.0, size=h)
    if r > 1:
        theta[:, 1:] = rng.gamma(hyper.mig_a2, 1.0, size=(h, r - 1))
    return theta


def init_state(dataset, hyper, rng):
    """Data-informed start: empirical pooled log-odds, random assignments,
    prior mixing vectors, alternative indicator on."""
    h, r = hyper.h_max, hyper.r_max
    n1, n2 = dataset.group_sizes()
    freqs = np.clip(dataset.networks.mean(axis=0), *_FREQ_CLAMP)
    z = np.log(freqs) - np.log1p(-freqs)
    theta = _draw_shrink_prior(h, r, hyper, rng)
    coords = rng.standard_normal((h, dataset.v, r))
    mixing = np.stack([_dirichlet(np.full(h, hyper.dirichlet_conc), rng) for _ in range(2)])
    state = GibbsState(
        p_y1=(n1 + hyper.beta_a) / (dataset.n + hyper.beta_a + hyper.beta_b),
        mixing=mixing,
        shared_mixing=_dirichlet(np.full(h, hyper.dirichlet_conc), rng),
        test_indicator=1,
        base_logits=z,
        coords=coords,
        shrink=theta,
        assignments=rng.integers(0, h, size=dataset.n),
    )
    return state


def _update_assignments(state, networks_f, groups0, rng):
    """Step 2: categorical draws proportional to mixing times edge likelihood."""
    table = state.edge_prob_table()
    logp = np.log(table)
    log1mp = np.log1p(-table)
    loglik = networks_f @ (logp - log1mp).T + log1mp.sum(axis=1)[None, :]
    loglik += np.log(np.clip(state.mixing[groups0], PROB_FLOOR, None))
    loglik -= loglik.max(axis=1, keepdims=True)
    probs = np.exp(loglik)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(networks_f.shape[0]) * cum[:, -1]
    state.assignments = (u[:, None] > cum).sum(axis=1)


def _update_logistic_block(state, networks_f, hyper, rng, pg_exact=True):
    """Step 3: Polya-gamma draws, then the shared log-odds, the coordinate
    rows of each occupied component, and the shrinkage factors."""
    h_max, v, r = state.coords.shape
    n, length = networks_f.shape
    contrib = state.pair_contributions()            # (H, L)
    psi = state.base_logits[None, :] + contrib[state.assignments]
    sampler = pg_draw if pg_exact else pg_draw_series
    omega = sampler(psi, rng)

    occupancy = np.bincount(state.assignments, minlength=h_max)
    omega_by_h = np.zeros((h_max, length))
    edges_by_h = np.zeros((h_max, length))
    for comp in np.nonzero(occupancy)[0]:
        members = state.assignments == comp
        omega_by_h[comp] = omega[members].sum(axis=0)
        edges_by_h[comp] = networks_f[members].sum(axis=0)

    # Shared log-odds: Gaussian full conditional per edge.
    prec = 1.0 / hyper.z_var + omega.sum(axis=0)
    lin = (
        hyper.z_mean / hyper.z_var
        + networks_f.sum(axis=0) - n / 2.0
        - np.einsum("hl,hl->l", omega_by_h, contrib)
    )
    state.base_logits = lin / prec + rng.standard_normal(length) / np.sqrt(prec)

    lam = state.weights
    occupied = np.nonzero(occupancy)[0]
    empty = np.nonzero(occupancy == 0)[0]

    # Coordinate rows: sequential Gaussian updates per occupied component
    # (components are independent given the assignments and omega).
    edge_idx, other = pairs_touching(v)
    for comp in occupied:
        kappa = edges_by_h[comp] - occupancy[comp] / 2.0
        update_coords_rows(
            state.coords[comp], lam[comp], omega_by_h[comp], kappa,
            state.base_logits, edge_idx, other, rng,
        )

    # Empty components regenerate from the prior.
    for comp in empty:
        state.coords[comp] = rng.standard_normal((v, r)) * np.sqrt(lam[comp])

    _update_shrink(state, hyper, rng)
    _interweave_shrink(state, hyper, rng, occupied, omega_by_h, edges_by_h, occupancy)


def _update_shrink(state, hyper, rng):
    """Gamma full conditionals of the multiplicative shrinkage factors."""
    h_max, v, r = state.coords.shape
    sq = np.sum(state.coords**2, axis=1)  # (H, R) column sums of squares
    for comp in range(h_max):
        mig_gamma_update(state.shrink[comp], sq[comp], v, hyper.mig_a1, hyper.mig_a2, rng)


def _interweave_shrink(state, hyper, rng, occupied, omega_by_h, edges_by_h, occupancy):
    """Ancillary traversal of the shrinkage factors for occupied components.

    The sufficient-parametrization gamma update mixes slowly when a
    component's structure must grow against its own shrinkage. Re-expressed
    with whitened coordinates held fixed, each factor gets an extra exact
    univariate (slice) update against the Polya-gamma pseudo-likelihood,
    then the coordinates are rescaled back. Both moves target the same
    joint posterior.
    """
    h_max, v, r = state.coords.shape
    rows, cols = pair_indices(v)
    z = state.base_logits
    for comp in occupied:
        theta = state.shrink[comp]
        lam = 1.0 / np.cumprod(theta)
        white = state.coords[comp] / np.sqrt(lam)  # fixed ancillary coordinates
        pair_prods = np.ascontiguousarray(white[rows] * white[cols])
        kappa = edges_by_h[comp] - occupancy[comp] / 2.0
        c1 = kappa - omega_by_h[comp] * z
        interweave_theta(
            theta, pair_prods, c1, omega_by_h[comp], hyper.mig_a1, hyper.mig_a2, rng,
        )
        state.coords[comp] = white * np.sqrt(1.0 / np.cumprod(theta))


def _update_hypothesis(state, groups0, hyper, rng):
    """Steps 4 and 5: hypothesis indicator, then mixing vectors."""
    h_max = state.coords.shape[0]
    counts_g1 = np.bincount(state.assignments[groups0 == 0], minlength=h_max)
    counts_g2 = np.bincount(state.assignments[groups0 == 1], minlength=h_max)
    pr_h1 = h1_conditional_prob(counts_g1, counts_g2, hyper)
    state.test_indicator = int(rng.random() < pr_h1)

    conc = hyper.dirichlet_conc
    if state.test_indicator == 0:
        state.shared_mixing = _dirichlet(conc + counts_g1 + counts_g2, rng)
        state.mixing = np.stack([state.shared_mixing, state.shared_mixing])
    else:
        state.mixing = np.stack(
            [_dirichlet(conc + counts_g1, rng), _dirichlet(conc + counts_g2, rng)]
        )
        state.shared_mixing = _dirichlet(np.full(h_max, conc), rng)


def gibbs_step(state, dataset, hyper, rng, networks_f=None, pg_exact=True):
    """One full sweep over steps 1-5, mutating and returning the state."""
    if networks_f is None:
        networks_f = dataset.networks.astype(np.float64)
    n1, n2 = dataset.group_sizes()
    groups0 = dataset.groups - 1

    state.p_y1 = rng.beta(hyper.beta_a + n1, hyper.beta_b + n2)
    _update_assignments(state, networks_f, groups0, rng)
    _update_logistic_block(state, networks_f, hyper, rng, pg_exact=pg_exact)
    _update_hypothesis(state, groups0, hyper, rng)
    return state


def _predictive_sample(state, table, rng, blocks, block_mask):
    """One posterior-predictive network per group: summary statistics plus
    within/between-block edge counts."""
    length = table.shape[1]
    stats = np.empty((2, len(SUMMARY_NAMES)))
    counts = np.empty((2, 2))
    for y0 in range(2):
        comp = (rng.random() > np.cumsum(state.mixing[y0])).sum()
        edges = (rng.random(length) < table[comp]).astype(np.uint8)
        s = summary_stats(edges, blocks)
        stats[y0] = [s[name] for name in SUMMARY_NAMES]
        if block_mask is not None:
            within = int(edges[block_mask].sum())
            counts[y0] = (within, int(edges.sum()) - within)
    return stats, counts


def run_chain(dataset, hyper=None, config=None, chain_index=0):
    """Run one chain and collect thinned post-burn-in derived functionals.

    Deterministic for a fixed (seed, chain_index) pair. Raises SamplerError
    with the iteration index if the state goes non-finite.
    """
    hyper = hyper or Hyperparameters()
    config = config or GibbsConfig()
    rng = np.random.default_rng([config.seed, chain_index])
    networks_f = dataset.networks.astype(np.float64)
    state = init_state(dataset, hyper, rng)

    n_stored = config.n_stored
    h_max, length = hyper.h_max, dataset.n_edges
    store = {
        "test_indicator": np.empty(n_stored),
        "p_y1": np.empty(n_stored),
        "mixing_g1": np.empty((n_stored, h_max)),
        "mixing_g2": np.empty((n_stored, h_max)),
        "edge_prob_g1": np.empty((n_stored, length)),
        "edge_prob_g2": np.empty((n_stored, length)),
        "association": np.empty((n_stored, length)),
        "occupancy": np.empty((n_stored, h_max), dtype=np.int64),
    }
    blocks = dataset.blocks
    block_mask = None
    if blocks is not None:
        rows, cols = pair_indices(dataset.v)
        block_mask = np.asarray(blocks)[rows] == np.asarray(blocks)[cols]
    if config.store_predictive:
        store["pred_summaries"] = np.empty((n_stored, 2, len(SUMMARY_NAMES)))
        store["pred_block_counts"] = np.empty((n_stored, 2, 2)) if blocks is not None else None

    keep = max(1, n_stored // max(1, min(config.predict_draws, n_stored)))
    pred_idx = np.arange(0, n_stored, keep)
    predict = {
        "p_y1": np.empty(pred_idx.size),
        "mixing": np.empty((pred_idx.size, 2, h_max)),
        "edge_probs": np.empty((pred_idx.size, h_max, length)),
    }

    stored = 0
    for it in range(config.n_iter):
        gibbs_step(state, dataset, hyper, rng, networks_f, pg_exact=config.pg_exact)
        if not (np.isfinite(state.base_logits).all() and np.isfinite(state.coords).all()):
            raise SamplerError(f"non-finite sampler state at iteration {it}")
        if it < config.burn_in or (it - config.burn_in) % config.thin:
            continue

        table = state.edge_prob_table()
        bar1 = state.mixing[0] @ table
        bar2 = state.mixing[1] @ table
        store["test_indicator"][stored] = state.test_indicator
        store["p_y1"][stored] = state.p_y1
        store["mixing_g1"][stored] = state.mixing[0]
        store["mixing_g2"][stored] = state.mixing[1]
        store["edge_prob_g1"][stored] = bar1
        store["edge_prob_g2"][stored] = bar2
        store["association"][stored] = cramers_v_from_marginals(bar1, bar2, state.p_y1)
        store["occupancy"][stored] = np.bincount(state.assignments, minlength=h_max)
        if config.store_predictive:
            stats, counts = _predictive_sample(state, table, rng, blocks, block_mask)
            store["pred_summaries"][stored] = stats
            if blocks is not None:
                store["pred_block_counts"][stored] = counts
        if stored % keep == 0 and stored // keep < pred_idx.size:
            j = stored // keep
            predict["p_y1"][j] = state.p_y1
            predict["mixing"][j] = state.mixing
            predict["edge_probs"][j] = table
        stored += 1

    return PosteriorChain(
        v=dataset.v,
        hyper=hyper.to_dict(),
        config=config.to_dict(),
        chain_index=chain_index,
        blocks=None if blocks is None else np.asarray(blocks),
        predict_params=predict,
        **store,
    )
