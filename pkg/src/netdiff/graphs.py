"""Binary network representation and topological summary statistics.

Networks on ``v`` labelled nodes are stored as flat binary edge vectors
holding the strict lower triangle of the adjacency matrix in column-major
order: (A[1,0], A[2,0], ..., A[v-1,0], A[2,1], ..., A[v-1,v-2]).
"""

from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import FormatError

__all__ = [
    "n_pairs",
    "node_count_from_length",
    "pair_indices",
    "pairs_touching",
    "vectorize",
    "devectorize",
    "summary_stats",
    "SUMMARY_NAMES",
]

SUMMARY_NAMES = ("density", "transitivity", "avg_path_length", "assortativity")


def n_pairs(v):
    """Number of unordered node pairs, v*(v-1)/2."""
    return v * (v - 1) // 2


def node_count_from_length(length):
    """Invert n_pairs; raises FormatError if length is not triangular."""
    v = int(round((1 + np.sqrt(1 + 8 * length)) / 2))
    if v < 2 or n_pairs(v) != length:
        raise FormatError(f"edge vector length {length} is not v*(v-1)/2 for any integer v")
    return v


@lru_cache(maxsize=None)
def pair_indices(v):
    """Arrays (rows, cols) with rows[l] > cols[l] giving the node pair of edge l.

    Ordering is column-major over the lower triangle, matching the edge
    vector layout. Cached per node count: this mapping sits on the hot
    path of the sampler.
    """
    if v < 2:
        raise FormatError(f"need at least 2 nodes, got v={v}")
    cols, rows = np.triu_indices(v, k=1)
    return rows, cols


@lru_cache(maxsize=None)
def pairs_touching(v):
    """For each node, the edge indices of its v-1 incident pairs and the
    opposite endpoints, as two (v, v-1) integer arrays."""
    rows, cols = pair_indices(v)
    edge_idx = np.empty((v, v - 1), dtype=np.int64)
    other = np.empty((v, v - 1), dtype=np.int64)
    for node in range(v):
        mask = (rows == node) | (cols == node)
        idx = np.nonzero(mask)[0]
        edge_idx[node] = idx
        other[node] = np.where(rows[idx] == node, cols[idx], rows[idx])
    return edge_idx, other


def vectorize(adjacency):
    """Flatten a symmetric hollow binary adjacency matrix into an edge vector."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise FormatError(f"adjacency must be square, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise FormatError("adjacency entries must be 0 or 1")
    if np.any(np.diag(a) != 0):
        raise FormatError("adjacency must have a zero diagonal")
    if not np.array_equal(a, a.T):
        raise FormatError("adjacency must be symmetric")
    rows, cols = pair_indices(a.shape[0])
    return a[rows, cols].astype(np.uint8)


def devectorize(edges):
    """Inverse of vectorize: rebuild the symmetric adjacency matrix."""
    e = np.asarray(edges)
    if e.ndim != 1:
        raise FormatError(f"edge vector must be 1-dimensional, got shape {e.shape}")
    if not np.isin(e, (0, 1)).all():
        raise FormatError("edge vector entries must be 0 or 1")
    v = node_count_from_length(e.shape[0])
    rows, cols = pair_indices(v)
    a = np.zeros((v, v), dtype=np.uint8)
    a[rows, cols] = e
    a[cols, rows] = e
    return a


def _transitivity(a):
    # 3 * triangles / connected triples = trace(A^3) / sum(d*(d-1));
    # defined as 0 when there are no connected triples.
    deg = a.sum(axis=1)
    triples2 = float(np.sum(deg * (deg - 1)))
    if triples2 == 0:
        return 0.0
    closed = float(np.trace(np.linalg.multi_dot([a, a, a])))
    return closed / triples2


def _avg_path_length(a):
    # Mean shortest path over unordered node pairs. Unreachable pairs take
    # the maximum finite shortest-path length observed in the same graph;
    # an edgeless graph scores 0.
    if a.sum() == 0:
        return 0.0
    dist = shortest_path(csr_matrix(a), method="D", unweighted=True)
    v = a.shape[0]
    iu = np.triu_indices(v, k=1)
    d = dist[iu]
    finite = np.isfinite(d)
    if not finite.all():
        d = np.where(finite, d, d[finite].max())
    return float(d.mean())


def _assortativity(a, blocks):
    # Newman's categorical assortativity on the block attribute. Undefined
    # (nan) for an edgeless graph or when every node is in one block.
    rows, cols = np.nonzero(np.triu(a, k=1))
    if rows.size == 0:
        return float("nan")
    cats = np.unique(blocks)
    code = np.searchsorted(cats, blocks)
    k = cats.size
    mix = np.zeros((k, k))
    np.add.at(mix, (code[rows], code[cols]), 1.0)
    np.add.at(mix, (code[cols], code[rows]), 1.0)
    mix /= mix.sum()
    trace = np.trace(mix)
    ab = float(mix.sum(axis=0) @ mix.sum(axis=1))
    if np.isclose(ab, 1.0):
        return float("nan")
    return float((trace - ab) / (1.0 - ab))


def summary_stats(edges, blocks=None):
    """Density, transitivity, average path length and block assortativity.

    Parameters
    ----------
    edges : binary edge vector
    blocks : length-v array of categorical node labels, required for the
        assortativity entry (reported as nan when omitted).

    Returns
    -------
    dict with keys ``density``, ``transitivity``, ``avg_path_length``,
    ``assortativity``.
    """
    a = devectorize(edges).astype(np.float64)
    v = a.shape[0]
    density = float(np.asarray(edges).sum()) / n_pairs(v)
    if blocks is None:
        assort = float("nan")
    else:
        blocks = np.asarray(blocks)
        if blocks.shape != (v,):
            raise FormatError(f"blocks must assign every one of the {v} nodes, got shape {blocks.shape}")
        assort = _assortativity(a, blocks)
    return {
        "density": density,
        "transitivity": _transitivity(a),
        "avg_path_length": _avg_path_length(a),
        "assortativity": assort,
    }


def summary_matrix(networks, blocks=None):
    """Stack summary_stats over the rows of an (n, L) edge matrix into (n, 4)."""
    nets = np.asarray(networks)
    out = np.empty((nets.shape[0], len(SUMMARY_NAMES)))
    for i, row in enumerate(nets):
        s = summary_stats(row, blocks)
        out[i] = [s[name] for name in SUMMARY_NAMES]
    return out
