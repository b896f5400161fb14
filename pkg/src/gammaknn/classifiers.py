"""gamma-kNN and the distance-based k-NN baselines.

Shared conventions
------------------
* Ranking key for neighbors: ``(distance, positives before negatives,
  training-row index)``.
* Majority vote: predict +1 iff the number of positive neighbors is at least
  ``k / 2`` (so an even-k tie goes to the positive class).

gamma-kNN never ranks all training points under d_gamma.  It searches each
group (negatives, real positives, synthetic positives) with the plain
distance, rescales each group's list by its own multiplier and merges.  That
is exact because the global top-k never holds more than k points of a group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DataError, concat
from .neighbors import (GammaDistanceParams, NeighborList, group_knn,
                        pairwise_distances)

CLASSIFIERS = ("knn", "wknn", "cwknn", "dupknn", "gammaknn")


def _check_query_dim(train: Dataset, Q: np.ndarray) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != train.p:
        raise DataError(f"dimension mismatch: queries have {Q.shape[1]} "
                        f"features, training data {train.p}")
    return Q


def _vote(positive_votes, k: int):
    return np.where(np.asarray(positive_votes) >= k / 2.0, 1, -1)


# ---------------------------------------------------------------------------
# gamma-kNN


@dataclass(frozen=True, eq=False)
class Candidates:
    """Per-query k nearest neighbors of every group, padded with inf/-1."""

    index: np.ndarray
    dist: np.ndarray
    positive: np.ndarray
    synthetic: np.ndarray


def candidate_neighbors(train: Dataset, Q, k: int) -> Candidates:
    """Run the per-group searches once; independent of any gamma value."""
    Q = _check_query_dim(train, Q)
    n = len(Q)
    groups = (
        (train.labels == -1, False, False),
        ((train.labels == 1) & ~train.synthetic, True, False),
        ((train.labels == 1) & train.synthetic, True, True),
    )
    idx, dist, pos, syn = [], [], [], []
    for mask, is_pos, is_syn in groups:
        rows = np.flatnonzero(mask)
        if len(rows) == 0:
            continue
        local, d = group_knn(Q, train.features[rows], k)
        gi = np.full((n, k), -1, dtype=np.int64)
        gd = np.full((n, k), np.inf)
        gi[:, :local.shape[1]] = rows[local]
        gd[:, :d.shape[1]] = d
        idx.append(gi)
        dist.append(gd)
        pos.append(np.full((n, k), is_pos) & (gi >= 0))
        syn.append(np.full((n, k), is_syn) & (gi >= 0))
    return Candidates(np.hstack(idx), np.hstack(dist), np.hstack(pos), np.hstack(syn))


def merge_top_k(cand: Candidates, params: GammaDistanceParams, k: int):
    """Scale positive candidates and keep the k best under d_gamma.

    Returns ``(columns, scaled_distances)`` of shape ``(n, k)``; columns index
    into the candidate arrays.
    """
    scale = np.where(cand.positive,
                     np.where(cand.synthetic, params.gamma_synth, params.gamma_real),
                     1.0)
    scaled = cand.dist * scale
    tiebreak = np.where(cand.index < 0, np.iinfo(np.int64).max, cand.index)
    order = np.lexsort((tiebreak, ~cand.positive, scaled), axis=-1)[:, :k]
    return order, np.take_along_axis(scaled, order, axis=1)


def gamma_votes(cand: Candidates, params: GammaDistanceParams, k: int) -> np.ndarray:
    order, _ = merge_top_k(cand, params, k)
    return np.take_along_axis(cand.positive, order, axis=1).sum(axis=1)


@dataclass(frozen=True)
class Prediction:
    label: int
    positive_votes: int
    merged_neighbors: NeighborList


@dataclass(frozen=True, eq=False)
class GammaKnnModel:
    train: Dataset
    k: int = 3
    params: GammaDistanceParams = GammaDistanceParams()

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        self.train.check_trainable()

    def predict(self, X) -> np.ndarray:
        cand = candidate_neighbors(self.train, X, self.k)
        return _vote(gamma_votes(cand, self.params, self.k), self.k)


def gamma_knn_classify(model: GammaKnnModel, query) -> Prediction:
    """Classify one query with gamma-kNN and report the merged neighbor list."""
    query = np.asarray(query, dtype=float).ravel()
    cand = candidate_neighbors(model.train, query[None, :], model.k)
    order, scaled = merge_top_k(cand, model.params, model.k)
    keep = np.isfinite(scaled[0])
    cols = order[0][keep]
    votes = int(cand.positive[0, cols].sum())
    merged = NeighborList(cand.index[0, cols], scaled[0][keep])
    return Prediction(int(_vote(votes, model.k)), votes, merged)


# ---------------------------------------------------------------------------
# Baselines that rank every training point


def _ranked(train: Dataset, D: np.ndarray, k: int) -> np.ndarray:
    """Top-k column ids per row of a full distance matrix, shared tie rule."""
    n, m = D.shape
    index = np.broadcast_to(np.arange(m), (n, m))
    negative = np.broadcast_to(train.labels == -1, (n, m))
    return np.lexsort((index, negative, D), axis=-1)[:, :k]


def knn_predict(train: Dataset, X, k: int) -> np.ndarray:
    train.check_trainable()
    X = _check_query_dim(train, X)
    top = _ranked(train, pairwise_distances(X, train.features), k)
    return _vote((train.labels[top] == 1).sum(axis=1), k)


def knn_classify(train: Dataset, query, k: int) -> int:
    """Plain k-NN majority vote (ties resolved as in gamma-kNN)."""
    return int(knn_predict(train, np.asarray(query, dtype=float).ravel()[None, :], k)[0])


def weighted_knn_predict(train: Dataset, X, k: int) -> np.ndarray:
    train.check_trainable()
    X = _check_query_dim(train, X)
    D = pairwise_distances(X, train.features)
    top = _ranked(train, D, k)
    d = np.take_along_axis(D, top, axis=1)
    y = train.labels[top].astype(float)
    exact = d == 0
    with np.errstate(divide="ignore"):
        score = np.where(exact.any(axis=1),
                         np.where(exact, y, 0.0).sum(axis=1),
                         (y / d).sum(axis=1))
    return np.where(score >= 0, 1, -1)


def weighted_knn_classify(train: Dataset, query, k: int) -> int:
    """Inverse-distance weighted vote: sign of sum(y_i / d_i) over the k nearest.

    Neighbors at distance zero decide alone (sum of their labels).  A zero
    score predicts +1.
    """
    return int(weighted_knn_predict(
        train, np.asarray(query, dtype=float).ravel()[None, :], k)[0])


def class_weighted_distance(base_distance, neighbor_class_count: int, m: int, p: int):
    """Distance scaled by ``(m_i / m) ** (1 / p)``, m_i the neighbor's class size."""
    if not 1 <= neighbor_class_count <= m:
        raise ValueError("class count must lie in [1, m]")
    if p < 1:
        raise ValueError("p must be >= 1")
    return (neighbor_class_count / m) ** (1.0 / p) * base_distance


def class_weighted_knn_predict(train: Dataset, X, k: int, class_counts=None) -> np.ndarray:
    """cwk-NN: rank all points under the class-weighted distance, then vote.

    ``class_counts`` is ``(m+, m-)``; it defaults to the counts of ``train``.
    """
    train.check_trainable()
    X = _check_query_dim(train, X)
    m_pos, m_neg = class_counts or (train.n_pos, train.n_neg)
    m = m_pos + m_neg
    w = np.where(train.labels == 1,
                 class_weighted_distance(1.0, m_pos, m, train.p),
                 class_weighted_distance(1.0, m_neg, m, train.p))
    D = pairwise_distances(X, train.features) * w
    top = _ranked(train, D, k)
    return _vote((train.labels[top] == 1).sum(axis=1), k)


def dup_knn_train(train: Dataset) -> Dataset:
    """Replicate positives so each appears ``max(1, m- // m+)`` times in total.

    Copies stay real points; ``origin`` records which row each copy duplicates.
    """
    if train.n_pos < 1:
        raise DataError("duplication needs at least one positive")
    reps = max(1, train.n_neg // train.n_pos)
    if reps == 1:
        return train
    pos = np.flatnonzero(train.labels == 1)
    src = np.tile(pos, reps - 1)
    base = Dataset(train.features, train.labels, train.synthetic, train.name,
                   origin=np.arange(len(train)))
    copies = train.subset(src)
    copies = Dataset(copies.features, copies.labels, copies.synthetic, train.name,
                     origin=src)
    return concat(base, copies, name=f"{train.name}+dup")


# ---------------------------------------------------------------------------
# Uniform estimator objects, selected by name


class _Classifier:
    name = ""

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.train_: Dataset | None = None

    def fit(self, train: Dataset):
        train.check_trainable()
        self.train_ = train
        return self

    def __repr__(self):
        return f"{type(self).__name__}(k={self.k})"


class KNN(_Classifier):
    name = "knn"

    def predict(self, X):
        return knn_predict(self.train_, X, self.k)


class WeightedKNN(_Classifier):
    name = "wknn"

    def predict(self, X):
        return weighted_knn_predict(self.train_, X, self.k)


class ClassWeightedKNN(_Classifier):
    name = "cwknn"

    def fit(self, train):
        super().fit(train)
        self.class_counts_ = (train.n_pos, train.n_neg)
        return self

    def predict(self, X):
        return class_weighted_knn_predict(self.train_, X, self.k, self.class_counts_)


class DupKNN(_Classifier):
    name = "dupknn"

    def fit(self, train):
        return super().fit(dup_knn_train(train))

    def predict(self, X):
        return knn_predict(self.train_, X, self.k)


class GammaKNN(_Classifier):
    name = "gammaknn"

    def __init__(self, k: int = 3, gamma_real: float = 1.0, gamma_synth: float | None = None):
        super().__init__(k)
        self.params = GammaDistanceParams(gamma_real, gamma_synth)

    def fit(self, train):
        self.model_ = GammaKnnModel(train, self.k, self.params)
        return super().fit(train)

    def predict(self, X):
        return self.model_.predict(X)

    def __repr__(self):
        return (f"GammaKNN(k={self.k}, gamma_real={self.params.gamma_real}, "
                f"gamma_synth={self.params.gamma_synth})")


_REGISTRY = {c.name: c for c in (KNN, WeightedKNN, ClassWeightedKNN, DupKNN, GammaKNN)}


def make_classifier(name: str, k: int = 3, **params) -> _Classifier:
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}") from None
    return cls(k, **params)
