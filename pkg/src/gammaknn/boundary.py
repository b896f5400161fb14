"""Decision-boundary rasters for 2-D training sets, plus the analytic 1-NN curve.

With one positive P and one negative N, 1-NN under d_gamma predicts +1 iff
``gamma * |x - P| <= |x - N|``.  For gamma = 1 the boundary is the
perpendicular bisector of PN; otherwise it is the Apollonius circle

    C = (N - gamma^2 P) / (1 - gamma^2)
    R^2 = |C|^2 - (|N|^2 - gamma^2 |P|^2) / (1 - gamma^2)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifiers import GammaKnnModel
from .dataset import DataError, Dataset
from .neighbors import GammaDistanceParams


@dataclass(frozen=True)
class Grid:
    xs: np.ndarray          # cell-center x coordinates, length resolution
    ys: np.ndarray
    labels: np.ndarray      # shape (len(ys), len(xs)), row = y

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(self.xs[1] - self.xs[0], self.ys[1] - self.ys[0])

    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def positive_fraction(self) -> float:
        return float(np.mean(self.labels == 1))


def _bounding_box(X: np.ndarray, margin: float):
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    span = np.where(span > 0, span, 1.0)
    return lo - margin * span, hi + margin * span


def decision_grid(train: Dataset, gamma: float = 1.0, k: int = 1, resolution: int = 200,
                  margin: float = 0.1, gamma_synth: float | None = None) -> Grid:
    """Classify the centers of a ``resolution x resolution`` raster over the
    training bounding box, widened by ``margin`` of its span on every side."""
    if train.p != 2:
        raise DataError(f"boundary rasters need 2-D data, got p={train.p}")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    lo, hi = _bounding_box(train.features, margin)
    step = (hi - lo) / resolution
    xs = lo[0] + step[0] * (np.arange(resolution) + 0.5)
    ys = lo[1] + step[1] * (np.arange(resolution) + 0.5)
    model = GammaKnnModel(train, k, GammaDistanceParams(gamma, gamma_synth))
    gx, gy = np.meshgrid(xs, ys)
    labels = model.predict(np.column_stack([gx.ravel(), gy.ravel()]))
    return Grid(xs, ys, labels.reshape(resolution, resolution))


def write_grid(grid: Grid, path) -> None:
    pts = grid.points()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "label"])
        for (x, y), lab in zip(pts, grid.labels.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), int(lab)])


# ---------------------------------------------------------------------------
# Analytic 1-NN boundary for a single positive / negative pair


def apollonius_circle(positive, negative, gamma: float):
    """``(center, radius)`` of {x : gamma |x-P| = |x-N|}; None when gamma == 1."""
    P = np.asarray(positive, dtype=float)
    N = np.asarray(negative, dtype=float)
    g2 = gamma * gamma
    if g2 == 1.0:
        return None
    C = (N - g2 * P) / (1.0 - g2)
    r2 = C @ C - (N @ N - g2 * (P @ P)) / (1.0 - g2)
    return C, math.sqrt(max(r2, 0.0))


def analytic_label(x, positive, negative, gamma: float) -> np.ndarray:
    """Sign test ``gamma |x-P| <= |x-N|`` -> +1 / -1 (ties go positive)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dp = np.linalg.norm(x - np.asarray(positive, dtype=float), axis=1)
    dn = np.linalg.norm(x - np.asarray(negative, dtype=float), axis=1)
    return np.where(gamma * dp <= dn, 1, -1).astype(np.int8)


def distance_to_boundary(x, positive, negative, gamma: float) -> np.ndarray:
    """Euclidean distance from each row of ``x`` to the analytic boundary curve."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P = np.asarray(positive, dtype=float)
    N = np.asarray(negative, dtype=float)
    circle = apollonius_circle(P, N, gamma)
    if circle is None:
        u = (N - P) / np.linalg.norm(N - P)
        return np.abs((x - (P + N) / 2.0) @ u)
    C, R = circle
    return np.abs(np.linalg.norm(x - C, axis=1) - R)
