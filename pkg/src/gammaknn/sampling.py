"""Minority oversampling (SMOTE family) and majority cleaning (ENN, Tomek links).

Every oversampler generates points from the positive rows of its input only
(newly generated points never seed further generation).  A synthetic point
is ``x + t * (x_nn - x)`` with ``t ~ U[0, 1)``; pass ``return_trace=True`` to
get the ``(seed_row, neighbor_row, t)`` triple of every generated point.
Generated rows are appended after the input rows, flagged synthetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Dataset, DataError, concat
from .neighbors import knn_rows, pairwise_distances


class SamplingWarning(UserWarning):
    """A sampler had to fall back or returned its input unchanged."""


class Strategy(str, Enum):
    SMOTE = "smote"
    BORDERLINE = "borderline"
    ADASYN = "adasyn"
    SMOTE_ENN = "smote-enn"
    SMOTE_TOMEK = "smote-tomek"


SAMPLER_NAMES = ("none",) + tuple(s.value for s in Strategy)


@dataclass(frozen=True)
class SamplerConfig:
    strategy: Strategy = Strategy.SMOTE
    target_ratio: float = 1.0
    k_neighbors: int = 5
    seed: int = 0
    include_noise: bool = False  # Borderline only: also seed from n == k positives

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must lie in (0, 1]")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")

    def replace(self, **changes) -> "SamplerConfig":
        fields = dict(strategy=self.strategy, target_ratio=self.target_ratio,
                      k_neighbors=self.k_neighbors, seed=self.seed,
                      include_noise=self.include_noise)
        fields.update(changes)
        return SamplerConfig(**fields)


@dataclass(frozen=True, eq=False)
class Trace:
    """Generation record: row ids refer to the sampler's input dataset."""

    seeds: np.ndarray
    neighbors: np.ndarray
    t: np.ndarray

    def __len__(self):
        return len(self.t)


_EMPTY_TRACE = Trace(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))


def n_to_generate(train: Dataset, target_ratio: float) -> int:
    """``round(target_ratio * m-) - m+`` (half rounds up); at least 0."""
    want = math.floor(target_ratio * train.n_neg + 0.5 + 1e-9)
    return max(0, want - train.n_pos)


def _check(train: Dataset, config: SamplerConfig) -> None:
    if train.n_pos < 2:
        raise DataError("oversampling needs at least two positives")
    if train.n_neg < 1:
        raise DataError("oversampling needs at least one negative")
    current = train.n_pos / train.n_neg
    if config.target_ratio <= current:
        raise ValueError(
            f"target ratio {config.target_ratio} must exceed the current "
            f"m+/m- = {current:.4f}")


def _self_excluded_knn(D: np.ndarray, rows: np.ndarray, k: int) -> np.ndarray:
    """k nearest columns of each row of D, excluding the row's own column."""
    D = D.copy()
    D[np.arange(len(rows)), rows] = np.inf
    k = min(k, D.shape[1] - 1)
    return knn_rows(D, k)


def positive_neighbors(train: Dataset, k: int) -> tuple[np.ndarray, np.ndarray]:
    """For every positive row: ids of its k nearest other positives."""
    pos = np.flatnonzero(train.labels == 1)
    D = pairwise_distances(train.features[pos], train.features[pos])
    local = _self_excluded_knn(D, np.arange(len(pos)), k)
    return pos, pos[local]


def negatives_in_neighborhood(train: Dataset, rows: np.ndarray, k: int) -> np.ndarray:
    """Number of negatives among the k nearest neighbors (whole set) of each row."""
    D = pairwise_distances(train.features[rows], train.features)
    nn = _self_excluded_knn(D, rows, k)
    return (train.labels[nn] == -1).sum(axis=1)


def _interpolate(train: Dataset, seeds, neighbor_table, rng) -> tuple[Dataset, Trace]:
    """Generate one point per entry of ``seeds`` (positions into the positive list)."""
    pos, nbrs = neighbor_table
    seeds = np.asarray(seeds, dtype=np.int64)
    pick = rng.integers(0, nbrs.shape[1], size=len(seeds))
    t = rng.random(len(seeds))
    a = pos[seeds]
    b = nbrs[seeds, pick]
    X = train.features[a] + t[:, None] * (train.features[b] - train.features[a])
    new = Dataset(X, np.ones(len(seeds)), np.ones(len(seeds), dtype=bool),
                  name=train.name, origin=a)
    return new, Trace(a, b, t)


def _finish(train: Dataset, new: Dataset, trace: Trace, tag: str, return_trace: bool):
    if len(new) == 0:
        out = train
    else:
        if train.origin is None:
            base = Dataset(train.features, train.labels, train.synthetic, train.name,
                           origin=np.arange(len(train)))
        else:
            # synthetic rows point at their seed's own origin
            base = train
            new = Dataset(new.features, new.labels, new.synthetic, new.name,
                          origin=train.origin[new.origin])
        out = concat(base, new, name=f"{train.name}+{tag}")
    return (out, trace) if return_trace else out


def _round_robin(candidates: np.ndarray, count: int, rng) -> np.ndarray:
    order = rng.permutation(candidates)
    return np.resize(order, count) if count else np.empty(0, dtype=np.int64)


def smote(train: Dataset, config: SamplerConfig, return_trace: bool = False):
    """SMOTE up to ``m+/m- ~= target_ratio``.

    Seeds cycle round-robin over the positives (in a seeded random order); each
    draws one of its k nearest positive neighbors uniformly.
    """
    _check(train, config)
    rng = np.random.default_rng(config.seed)
    G = n_to_generate(train, config.target_ratio)
    table = positive_neighbors(train, config.k_neighbors)
    seeds = _round_robin(np.arange(len(table[0])), G, rng)
    new, trace = _interpolate(train, seeds, table, rng)
    return _finish(train, new, trace, "smote", return_trace)


def danger_mask(train: Dataset, k: int, include_noise: bool = False) -> np.ndarray:
    """Borderline test for every positive (in row order of the positives).

    A positive is in danger when ``k/2 <= n < k`` negatives sit among its k
    nearest neighbors; ``include_noise`` widens this to ``n <= k``.
    """
    pos = np.flatnonzero(train.labels == 1)
    k_eff = min(k, len(train) - 1)
    n = negatives_in_neighborhood(train, pos, k_eff)
    upper = n <= k_eff if include_noise else n < k_eff
    return (n >= k_eff / 2.0) & upper


def borderline_smote(train: Dataset, config: SamplerConfig, return_trace: bool = False):
    """Borderline-SMOTE: SMOTE seeded only from positives in the danger set."""
    _check(train, config)
    rng = np.random.default_rng(config.seed)
    danger = np.flatnonzero(danger_mask(train, config.k_neighbors, config.include_noise))
    if len(danger) == 0:
        warnings.warn("Borderline-SMOTE: empty danger set, dataset returned unchanged",
                      SamplingWarning, stacklevel=2)
        return (train, _EMPTY_TRACE) if return_trace else train
    G = n_to_generate(train, config.target_ratio)
    table = positive_neighbors(train, config.k_neighbors)
    seeds = _round_robin(danger, G, rng)
    new, trace = _interpolate(train, seeds, table, rng)
    return _finish(train, new, trace, "borderline", return_trace)


def apportion(weights, total: int) -> np.ndarray:
    """Split ``total`` into integers proportional to ``weights`` (largest remainder).

    Each share is the floor of its quota plus one for the largest remainders,
    so the shares always sum to ``total``; ties go to the lower position.
    """
    w = np.asarray(weights, dtype=float)
    quota = w / w.sum() * total
    share = np.floor(quota + 1e-9).astype(np.int64)
    left = total - int(share.sum())
    if left > 0:
        rem = quota - share
        share[np.argsort(-rem, kind="stable")[:left]] += 1
    return share


def adasyn(train: Dataset, config: SamplerConfig, return_trace: bool = False):
    """ADASYN: more synthetic points around positives with more negative neighbors.

    Hardness of a positive is its fraction of negatives among its k nearest
    neighbors (whole set); its share of the G points is proportional to it.
    """
    _check(train, config)
    rng = np.random.default_rng(config.seed)
    G = n_to_generate(train, config.target_ratio)
    pos = np.flatnonzero(train.labels == 1)
    k_eff = min(config.k_neighbors, len(train) - 1)
    r = negatives_in_neighborhood(train, pos, k_eff) / k_eff
    table = positive_neighbors(train, config.k_neighbors)
    if r.sum() == 0:
        warnings.warn("ADASYN: no positive has negative neighbors, using uniform "
                      "SMOTE allocation", SamplingWarning, stacklevel=2)
        seeds = _round_robin(np.arange(len(pos)), G, rng)
    else:
        g = apportion(r, G)
        seeds = np.repeat(np.arange(len(pos)), g)
    new, trace = _interpolate(train, seeds, table, rng)
    return _finish(train, new, trace, "adasyn", return_trace)


def enn_clean(train: Dataset, k: int = 3) -> Dataset:
    """Drop every negative that the vote of its k nearest neighbors calls positive.

    Votes are computed on the input set and all removals happen at once.
    Positives (real or synthetic) are never removed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(train) <= k:
        raise DataError(f"ENN with k={k} needs more than {k} points")
    neg = np.flatnonzero(train.labels == -1)
    if len(neg) == 0:
        return train
    D = pairwise_distances(train.features[neg], train.features)
    D[np.arange(len(neg)), neg] = np.inf
    m = D.shape[1]
    index = np.broadcast_to(np.arange(m), D.shape)
    negative = np.broadcast_to(train.labels == -1, D.shape)
    nn = np.lexsort((index, negative, D), axis=-1)[:, :k]
    votes = (train.labels[nn] == 1).sum(axis=1)
    drop = neg[votes >= k / 2.0]
    if len(drop) == len(neg):
        raise DataError("ENN cleaning would remove every negative example")
    keep = np.setdiff1d(np.arange(len(train)), drop)
    return train.subset(keep)


def tomek_links(train: Dataset) -> list[tuple[int, int]]:
    """Cross-class mutual nearest-neighbor pairs ``(positive_row, negative_row)``.

    A pair only counts when each point is the *unique* nearest neighbor of the
    other: any third point at an equal or smaller distance breaks the link.
    """
    if len(train) < 2:
        return []
    D = pairwise_distances(train.features, train.features)
    np.fill_diagonal(D, np.inf)
    nn = np.argmin(D, axis=1)
    best = D[np.arange(len(D)), nn]
    unique = (D == best[:, None]).sum(axis=1) == 1
    links = []
    for i in np.flatnonzero(train.labels == 1):
        j = nn[i]
        if train.labels[j] == -1 and nn[j] == i and unique[i] and unique[j]:
            links.append((int(i), int(j)))
    return links


def tomek_clean(train: Dataset) -> Dataset:
    """Remove the negative member of every Tomek link (simultaneously)."""
    drop = {j for _, j in tomek_links(train)}
    if not drop:
        return train
    keep = np.setdiff1d(np.arange(len(train)), np.fromiter(drop, dtype=np.int64))
    return train.subset(keep)


def smote_then_clean(train: Dataset, config: SamplerConfig, return_trace: bool = False):
    """SMOTE followed by ENN (k=3) or Tomek-link cleaning, per ``config.strategy``."""
    out, trace = smote(train, config, return_trace=True)
    if config.strategy is Strategy.SMOTE_ENN:
        out = enn_clean(out, k=3)
    elif config.strategy is Strategy.SMOTE_TOMEK:
        out = tomek_clean(out)
    else:
        raise ValueError(f"{config.strategy.value} is not a combined strategy")
    return (out, trace) if return_trace else out


def resample(train: Dataset, config: SamplerConfig | None, return_trace: bool = False):
    """Apply the configured strategy; ``None`` returns the input unchanged."""
    if config is None:
        return (train, _EMPTY_TRACE) if return_trace else train
    fn = {
        Strategy.SMOTE: smote,
        Strategy.BORDERLINE: borderline_smote,
        Strategy.ADASYN: adasyn,
        Strategy.SMOTE_ENN: smote_then_clean,
        Strategy.SMOTE_TOMEK: smote_then_clean,
    }[config.strategy]
    return fn(train, config, return_trace=return_trace)
