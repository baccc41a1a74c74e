"""Stored posterior draws of derived functionals, and their on-disk layout.

A chain directory holds ``meta.json`` plus one CSV matrix per functional
(rows are stored iterations); the component-level parameters kept for
group prediction live in ``predict_params.npz``.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .graphs import SUMMARY_NAMES

__all__ = ["PosteriorChain", "save_chain", "load_chain", "pool_chains"]

_MATRIX_FIELDS = (
    "test_indicator",
    "p_y1",
    "mixing_g1",
    "mixing_g2",
    "edge_prob_g1",
    "edge_prob_g2",
    "association",
    "occupancy",
)


@dataclass
class PosteriorChain:
    """Thinned post-burn-in draws of the reporting functionals.

    Per stored iteration: the hypothesis indicator, group-1 probability,
    both mixing vectors, both group edge-probability vectors, the per-edge
    association coefficients, and component occupancy counts; optionally
    one posterior-predictive network summary per group.
    """

    v: int
    hyper: dict
    config: dict
    test_indicator: np.ndarray
    p_y1: np.ndarray
    mixing_g1: np.ndarray
    mixing_g2: np.ndarray
    edge_prob_g1: np.ndarray
    edge_prob_g2: np.ndarray
    association: np.ndarray
    occupancy: np.ndarray
    chain_index: int = 0
    blocks: np.ndarray | None = None
    pred_summaries: np.ndarray | None = None
    pred_block_counts: np.ndarray | None = None
    predict_params: dict | None = field(default=None, repr=False)

    @property
    def n_stored(self):
        return self.test_indicator.shape[0]

    @property
    def n_edges(self):
        return self.edge_prob_g1.shape[1]

    def monitored(self):
        """Columns watched by the convergence diagnostics: the per-edge
        association coefficients and both group edge-probability vectors."""
        named = {}
        for l in range(self.n_edges):
            named[f"association[{l}]"] = self.association[:, l]
            named[f"edge_prob_g1[{l}]"] = self.edge_prob_g1[:, l]
            named[f"edge_prob_g2[{l}]"] = self.edge_prob_g2[:, l]
        return named


def save_chain(chain, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    meta = {
        "v": chain.v,
        "hyper": chain.hyper,
        "config": chain.config,
        "chain_index": chain.chain_index,
        "n_stored": chain.n_stored,
        "summary_names": list(SUMMARY_NAMES),
        "has_blocks": chain.blocks is not None,
        "has_predictive": chain.pred_summaries is not None,
    }
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    for name in _MATRIX_FIELDS:
        arr = np.atleast_2d(getattr(chain, name).T).T
        np.savetxt(os.path.join(out_dir, f"{name}.csv"), arr, delimiter=",")
    if chain.blocks is not None:
        np.savetxt(os.path.join(out_dir, "blocks.csv"), chain.blocks, fmt="%d")
    if chain.pred_summaries is not None:
        flat = chain.pred_summaries.reshape(chain.n_stored, -1)
        np.savetxt(os.path.join(out_dir, "pred_summaries.csv"), flat, delimiter=",")
    if chain.pred_block_counts is not None:
        flat = chain.pred_block_counts.reshape(chain.n_stored, -1)
        np.savetxt(os.path.join(out_dir, "pred_block_counts.csv"), flat, delimiter=",")
    if chain.predict_params is not None:
        np.savez_compressed(
            os.path.join(out_dir, "predict_params.npz"), **chain.predict_params
        )


def load_chain(chain_dir):
    with open(os.path.join(chain_dir, "meta.json")) as fh:
        meta = json.load(fh)
    fields = {}
    for name in _MATRIX_FIELDS:
        arr = np.loadtxt(os.path.join(chain_dir, f"{name}.csv"), delimiter=",", ndmin=2)
        fields[name] = arr[:, 0] if name in ("test_indicator", "p_y1") else arr
    blocks = None
    bpath = os.path.join(chain_dir, "blocks.csv")
    if meta.get("has_blocks") and os.path.exists(bpath):
        blocks = np.loadtxt(bpath).astype(np.int64)
    pred_summaries = None
    pred_block_counts = None
    if meta.get("has_predictive"):
        spath = os.path.join(chain_dir, "pred_summaries.csv")
        if os.path.exists(spath):
            flat = np.loadtxt(spath, delimiter=",", ndmin=2)
            pred_summaries = flat.reshape(meta["n_stored"], 2, -1)
        cpath = os.path.join(chain_dir, "pred_block_counts.csv")
        if os.path.exists(cpath):
            flat = np.loadtxt(cpath, delimiter=",", ndmin=2)
            pred_block_counts = flat.reshape(meta["n_stored"], 2, 2)
    predict_params = None
    ppath = os.path.join(chain_dir, "predict_params.npz")
    if os.path.exists(ppath):
        with np.load(ppath) as data:
            predict_params = {k: data[k] for k in data.files}
    return PosteriorChain(
        v=meta["v"],
        hyper=meta["hyper"],
        config=meta["config"],
        chain_index=meta.get("chain_index", 0),
        blocks=blocks,
        pred_summaries=pred_summaries,
        pred_block_counts=pred_block_counts,
        predict_params=predict_params,
        **fields,
    )


def pool_chains(chains):
    """Concatenate stored draws across chains for pooled reporting."""
    if len(chains) == 1:
        return chains[0]
    first = chains[0]
    merged = {
        name: np.concatenate([getattr(c, name) for c in chains]) for name in _MATRIX_FIELDS
    }
    pred_summaries = None
    if all(c.pred_summaries is not None for c in chains):
        pred_summaries = np.concatenate([c.pred_summaries for c in chains])
    pred_block_counts = None
    if all(c.pred_block_counts is not None for c in chains):
        pred_block_counts = np.concatenate([c.pred_block_counts for c in chains])
    predict_params = None
    if all(c.predict_params is not None for c in chains):
        predict_params = {
            k: np.concatenate([c.predict_params[k] for c in chains])
            for k in first.predict_params
        }
    return PosteriorChain(
        v=first.v,
        hyper=first.hyper,
        config=first.config,
        chain_index=-1,
        blocks=first.blocks,
        pred_summaries=pred_summaries,
        pred_block_counts=pred_block_counts,
        predict_params=predict_params,
        **merged,
    )
