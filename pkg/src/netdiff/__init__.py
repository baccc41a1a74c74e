"""Bayesian inference and testing of group differences in populations of
labelled binary networks, via a dependent mixture of low-rank logistic
factorizations fitted by Gibbs sampling."""

__version__ = "0.1.0"

from .datasets import NetworkDataset, load_dataset, save_dataset
from .gibbs import GibbsConfig, Hyperparameters, gibbs_step, init_state, run_chain
from .graphs import devectorize, summary_stats, vectorize
from .model import (
    ComponentFactors,
    MixtureModelState,
    component_edge_probs,
    cramers_v,
    enumerate_pmf,
    group_edge_probs,
    mixture_pmf,
    sample_network,
)
from .testing import bayes_fdr_threshold, global_test, local_tests, predict_group

__all__ = [
    "__version__",
    "NetworkDataset",
    "load_dataset",
    "save_dataset",
    "GibbsConfig",
    "Hyperparameters",
    "gibbs_step",
    "init_state",
    "run_chain",
    "devectorize",
    "summary_stats",
    "vectorize",
    "ComponentFactors",
    "MixtureModelState",
    "component_edge_probs",
    "cramers_v",
    "enumerate_pmf",
    "group_edge_probs",
    "mixture_pmf",
    "sample_network",
    "bayes_fdr_threshold",
    "global_test",
    "local_tests",
    "predict_group",
]
