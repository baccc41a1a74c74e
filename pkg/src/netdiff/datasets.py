"""Dataset container and file ingestion.

Canonical interchange format: a networks CSV with one binary edge vector
per row (header optional), a single-column groups CSV of labels in {1, 2},
and an optional single-column blocks CSV with one categorical id per node.
A directory of whitespace-delimited v-by-v adjacency matrices (read in
alphabetical order) is accepted in place of the networks CSV.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, LoadError
from .graphs import node_count_from_length, n_pairs, vectorize

__all__ = ["NetworkDataset", "load_dataset", "save_dataset"]


@dataclass(frozen=True)
class NetworkDataset:
    """n observed networks on a shared node set with group labels.

    networks: (n, v*(v-1)/2) uint8 edge vectors
    groups:   (n,) int labels in {1, 2}
    blocks:   optional (v,) categorical node labels (e.g. hemispheres)
    """

    v: int
    networks: np.ndarray
    groups: np.ndarray
    blocks: np.ndarray | None = None

    def __post_init__(self):
        nets = np.ascontiguousarray(np.asarray(self.networks, dtype=np.uint8))
        groups = np.asarray(self.groups, dtype=np.int64)
        object.__setattr__(self, "networks", nets)
        object.__setattr__(self, "groups", groups)
        if nets.ndim != 2:
            raise FormatError("networks must be a 2-d array of edge vectors")
        if nets.shape[1] != n_pairs(self.v):
            raise FormatError(
                f"edge vectors of length {nets.shape[1]} do not match v={self.v}"
            )
        if not np.isin(nets, (0, 1)).all():
            raise FormatError("network entries must be 0 or 1")
        if groups.shape != (nets.shape[0],):
            raise FormatError("groups must hold one label per network")
        if not np.isin(groups, (1, 2)).all():
            bad = int(np.nonzero(~np.isin(groups, (1, 2)))[0][0])
            raise FormatError(f"group label {groups[bad]} at row {bad} is outside {{1, 2}}")
        if self.blocks is not None:
            blocks = np.asarray(self.blocks)
            object.__setattr__(self, "blocks", blocks)
            if blocks.shape != (self.v,):
                raise FormatError(f"blocks must assign all {self.v} nodes, got shape {blocks.shape}")

    @property
    def n(self):
        return self.networks.shape[0]

    @property
    def n_edges(self):
        return self.networks.shape[1]

    def group_sizes(self):
        return int(np.sum(self.groups == 1)), int(np.sum(self.groups == 2))


def _read_numeric_csv(path, what):
    """Rows of a CSV as lists of floats; a single non-numeric first row is
    treated as a header and skipped."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                if i == 0:
                    continue  # header
                raise LoadError(f"{what} {path}: non-numeric entry at row {i}")
    if not rows:
        raise LoadError(f"{what} {path}: no data rows")
    return rows


def _networks_from_csv(path):
    rows = _read_numeric_csv(path, "networks file")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise LoadError(f"networks file {path}: row {i} has {len(row)} columns, expected {width}")
        for x in row:
            if x not in (0.0, 1.0):
                raise LoadError(f"networks file {path}: non-binary entry {x} at row {i}")
    v = node_count_from_length(width)
    return np.array(rows, dtype=np.uint8), v


def _networks_from_dir(path):
    files = sorted(
        os.path.join(path, f) for f in os.listdir(path) if not f.startswith(".")
    )
    if not files:
        raise LoadError(f"adjacency directory {path} is empty")
    vecs = []
    v = None
    for f in files:
        try:
            a = np.loadtxt(f)
        except ValueError as exc:
            raise LoadError(f"adjacency file {f}: {exc}") from exc
        try:
            vec = vectorize(a)
        except FormatError as exc:
            raise LoadError(f"adjacency file {f}: {exc}") from exc
        if v is None:
            v = a.shape[0]
        elif a.shape[0] != v:
            raise LoadError(f"adjacency file {f}: {a.shape[0]} nodes, expected {v}")
        vecs.append(vec)
    return np.array(vecs, dtype=np.uint8), v


def load_networks(networks_path):
    """Networks alone (CSV or adjacency directory); returns (array, v)."""
    if os.path.isdir(networks_path):
        return _networks_from_dir(networks_path)
    return _networks_from_csv(networks_path)


def load_dataset(networks_path, groups_path, blocks_path=None):
    """Load and validate a NetworkDataset from disk.

    ``networks_path`` may be a CSV of edge vectors or a directory of
    adjacency matrices. Raises LoadError naming the offending file/row.
    """
    if os.path.isdir(networks_path):
        nets, v = _networks_from_dir(networks_path)
    else:
        nets, v = _networks_from_csv(networks_path)

    grows = _read_numeric_csv(groups_path, "groups file")
    labels = []
    for i, row in enumerate(grows):
        if len(row) != 1:
            raise LoadError(f"groups file {groups_path}: row {i} must have one column")
        if row[0] not in (1.0, 2.0):
            raise LoadError(f"groups file {groups_path}: label {row[0]} at row {i} is outside {{1, 2}}")
        labels.append(int(row[0]))
    if len(labels) != nets.shape[0]:
        raise LoadError(
            f"groups file {groups_path} has {len(labels)} labels for {nets.shape[0]} networks"
        )

    blocks = None
    if blocks_path is not None:
        brows = _read_numeric_csv(blocks_path, "blocks file")
        if any(len(r) != 1 for r in brows):
            raise LoadError(f"blocks file {blocks_path}: expected one column")
        if len(brows) != v:
            raise LoadError(f"blocks file {blocks_path} has {len(brows)} rows for v={v} nodes")
        blocks = np.array([int(r[0]) for r in brows])

    return NetworkDataset(v=v, networks=nets, groups=np.array(labels), blocks=blocks)


def save_dataset(dataset, networks_path, groups_path, blocks_path=None):
    """Write a dataset in the canonical CSV layout (no headers)."""
    np.savetxt(networks_path, dataset.networks, fmt="%d", delimiter=",")
    np.savetxt(groups_path, dataset.groups, fmt="%d")
    if blocks_path is not None and dataset.blocks is not None:
        np.savetxt(blocks_path, dataset.blocks, fmt="%d")
