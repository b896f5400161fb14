"""Exact Euclidean neighbor search and the gamma-scaled dissimilarity.

All searches are brute force.  Distances are true L2 values (never squared),
because gamma multiplies distances.  Equidistant points are ranked by their
training-row index so every search is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .dataset import Dataset, DataError, Provenance

# Upper bound on the size of the temporary (queries x points x features) block.
_CHUNK_ELEMENTS = 4_000_000


def pairwise_distances(Q, X) -> np.ndarray:
    """Euclidean distance matrix of shape ``(len(Q), len(X))``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if Q.shape[1] != X.shape[1]:
        raise DataError(f"dimension mismatch: {Q.shape[1]} vs {X.shape[1]}")
    out = np.empty((len(Q), len(X)))
    if len(X) == 0 or len(Q) == 0:
        return out
    step = max(1, _CHUNK_ELEMENTS // max(1, len(X) * X.shape[1]))
    for start in range(0, len(Q), step):
        diff = Q[start:start + step, None, :] - X[None, :, :]
        out[start:start + step] = np.sqrt(np.sum(diff * diff, axis=-1))
    return out


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(pairwise_distances(a[None, :], b[None, :])[0, 0])


@dataclass(frozen=True)
class GammaDistanceParams:
    """Multipliers applied to distances towards real and synthetic positives."""

    gamma_real: float = 1.0
    gamma_synth: float | None = None

    def __post_init__(self):
        if self.gamma_synth is None:
            object.__setattr__(self, "gamma_synth", self.gamma_real)
        if not (self.gamma_real > 0 and self.gamma_synth > 0):
            raise ValueError("gamma values must be strictly positive")

    def scale(self, label: int, provenance: Provenance) -> float:
        if label != 1:
            return 1.0
        return self.gamma_synth if provenance is Provenance.SYNTHETIC else self.gamma_real


def gamma_distance(base_distance: float, neighbor_label: int,
                   neighbor_provenance: Provenance, params: GammaDistanceParams) -> float:
    """d_gamma: unchanged towards negatives, scaled by gamma towards positives.

    Not a metric (it is asymmetric between classes by construction).
    """
    if base_distance < 0:
        raise ValueError("base distance must be non-negative")
    return params.scale(neighbor_label, neighbor_provenance) * base_distance


@dataclass(frozen=True, eq=False)
class NeighborList:
    """Training-row ids with their distances, ascending by distance."""

    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return zip(self.indices.tolist(), self.distances.tolist())

    def entries(self) -> list[tuple[int, float]]:
        return list(self)


def knn_rows(D: np.ndarray, k: int) -> np.ndarray:
    """Column ids of the ``k`` smallest entries per row, ties by column id."""
    k = min(k, D.shape[1])
    if k == 0:
        return np.empty((D.shape[0], 0), dtype=np.int64)
    # stable sort keeps equal distances in index order
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def group_knn(Q, X, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest rows of ``X`` for every query: ``(local_ids, distances)``."""
    D = pairwise_distances(Q, X)
    idx = knn_rows(D, k)
    return idx, np.take_along_axis(D, idx, axis=1)


def class_knn_search(train: Dataset, query, k: int, cls: int) -> NeighborList:
    """Exact k nearest neighbors of ``query`` among training rows of class ``cls``.

    Returns fewer than ``k`` entries when the class is smaller than ``k`` and an
    empty list when it has no points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=float).ravel()
    if query.shape[0] != train.p:
        raise DataError(f"dimension mismatch: query has {query.shape[0]} "
                        f"features, training data {train.p}")
    rows = np.flatnonzero(train.labels == cls)
    if len(rows) == 0:
        return NeighborList(np.empty(0, dtype=np.int64), np.empty(0))
    local, dist = group_knn(query[None, :], train.features[rows], k)
    return NeighborList(rows[local[0]], dist[0])
