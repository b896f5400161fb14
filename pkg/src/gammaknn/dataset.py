"""Labeled binary datasets: loading, normalization, splitting and subsampling.

Labels are always stored as ``+1`` (positive / minority) and ``-1``
(negative / majority).  Every row also carries a provenance flag telling
whether it is a real observation or a point produced by an oversampler.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


class Provenance(Enum):
    REAL = "real"
    SYNTHETIC = "synthetic"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix with +1/-1 labels and per-row provenance.

    ``origin`` optionally maps each row to the row of a parent dataset it was
    copied or generated from (-1 when there is no such row).
    """

    features: np.ndarray
    labels: np.ndarray
    synthetic: np.ndarray = None
    name: str = "dataset"
    origin: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got shape {X.shape}")
        y = np.asarray(self.labels).astype(np.int8).ravel()
        if len(y) != len(X):
            raise DataError(f"{len(X)} feature rows but {len(y)} labels")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be +1 or -1")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        syn = (np.zeros(len(y), dtype=bool) if self.synthetic is None
               else np.asarray(self.synthetic, dtype=bool).ravel())
        if len(syn) != len(y):
            raise DataError("provenance vector length does not match labels")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "synthetic", _frozen(syn))
        if self.origin is not None:
            origin = np.asarray(self.origin, dtype=np.int64).ravel()
            if len(origin) != len(y):
                raise DataError("origin vector length does not match labels")
            object.__setattr__(self, "origin", _frozen(origin))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.labels == -1))

    @property
    def n_synthetic(self) -> int:
        return int(np.count_nonzero(self.synthetic))

    def provenance(self, i: int) -> Provenance:
        return Provenance.SYNTHETIC if self.synthetic[i] else Provenance.REAL

    def subset(self, index, name: str | None = None) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.features[index],
            self.labels[index],
            self.synthetic[index],
            name=self.name if name is None else name,
            origin=None if self.origin is None else self.origin[index],
        )

    def with_name(self, name: str) -> "Dataset":
        return Dataset(self.features, self.labels, self.synthetic, name, self.origin)

    def check_trainable(self) -> None:
        if self.n_pos < 1 or self.n_neg < 1:
            raise DataError(
                f"{self.name}: training needs both classes "
                f"(m+={self.n_pos}, m-={self.n_neg})")


def concat(a: Dataset, b: Dataset, name: str | None = None) -> Dataset:
    if a.p != b.p:
        raise DataError(f"dimension mismatch: {a.p} vs {b.p}")
    origin = None
    if a.origin is not None or b.origin is not None:
        oa = a.origin if a.origin is not None else np.arange(len(a))
        ob = b.origin if b.origin is not None else np.full(len(b), -1)
        origin = np.concatenate([oa, ob])
    return Dataset(
        np.vstack([a.features, b.features]),
        np.concatenate([a.labels, b.labels]),
        np.concatenate([a.synthetic, b.synthetic]),
        name=a.name if name is None else name,
        origin=origin,
    )


# ---------------------------------------------------------------------------
# Reading and writing


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_table(path, comment: str | None = None, header: bool | None = None):
    """Read a delimited text file into ``(header, rows)``.

    ``rows`` is a list of ``(line_number, cells)`` with cells stripped of
    whitespace.  Lines starting with ``comment`` are skipped.  With
    ``header=None`` the presence of a header row is guessed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if comment and line.lstrip().startswith(comment):
                continue
            cells = next(csv.reader([line]))
            rows.append((lineno, [c.strip() for c in cells]))
    if not rows:
        raise DataError(f"{path}: no data rows")
    head = None
    if header is None:
        first = rows[0][1]
        second = rows[1][1] if len(rows) > 1 else []
        # a label column may be non-numeric in every row, so only call it a
        # header when some column switches from text to numbers, or when no
        # cell of the first row is numeric
        header = all(not _is_number(c) for c in first) or any(
            not _is_number(a) and _is_number(b) for a, b in zip(first, second))
    if header:
        head = rows[0][1]
        rows = rows[1:]
    return head, rows


def read_numeric_table(path) -> tuple[list[str] | None, np.ndarray]:
    """Read a fully numeric CSV (e.g. the theory tables) into a float matrix."""
    head, rows = read_table(path)
    out = []
    for lineno, cells in rows:
        try:
            out.append([float(c) for c in cells])
        except ValueError:
            raise DataError(f"{path}, line {lineno}: non-numeric cell") from None
    return head, np.array(out, dtype=float)


def _resolve_column(head, ncols: int, column) -> int:
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if head is None or column not in head:
            raise DataError(f"label column {column!r} not found")
        return head.index(column)
    idx = int(column)
    if idx < 0:
        idx += ncols
    if not 0 <= idx < ncols:
        raise DataError(f"label column index {column} out of range")
    return idx


def _same_label(raw: str, positive) -> bool:
    if raw == str(positive).strip():
        return True
    if _is_number(raw) and _is_number(str(positive)):
        return float(raw) == float(positive)
    return False


def load_csv(path, label_column=-1, positive_label="1", *, comment: str | None = None,
             header: bool | None = None, name: str | None = None,
             one_vs_rest: bool = False) -> Dataset:
    """Load a delimited file whose label column holds exactly two raw values.

    Rows labeled ``positive_label`` become +1, the other value -1.  With
    ``one_vs_rest`` any number of label values is accepted and every value
    other than ``positive_label`` becomes -1.  A column
    named ``provenance`` (values ``real``/``synthetic``) is read back as the
    provenance flag rather than as a feature.
    """
    path = Path(path)
    head, rows = read_table(path, comment=comment, header=header)
    ncols = len(rows[0][1])
    prov_idx = None
    if head is not None and "provenance" in head:
        prov_idx = head.index("provenance")
    # a trailing provenance column does not shift negative label indices
    label_idx = _resolve_column(head, ncols - (prov_idx == ncols - 1), label_column)

    feats, raw_labels, syn = [], [], []
    for lineno, cells in rows:
        if len(cells) != ncols:
            raise DataError(
                f"{path}, line {lineno}: expected {ncols} fields, got {len(cells)}")
        vals = []
        for j, c in enumerate(cells):
            if j == label_idx or j == prov_idx:
                continue
            try:
                v = float(c)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise DataError(
                    f"{path}, line {lineno}: non-numeric feature {c!r} in column {j}")
            vals.append(v)
        feats.append(vals)
        raw_labels.append(cells[label_idx])
        if prov_idx is not None:
            flag = cells[prov_idx].lower()
            if flag not in ("real", "synthetic"):
                raise DataError(f"{path}, line {lineno}: bad provenance {flag!r}")
            syn.append(flag == "synthetic")

    values = sorted(set(raw_labels))
    if len(values) > 2 and not one_vs_rest:
        raise DataError(f"{path}: more than two label values: {values[:5]}")
    y = np.array([1 if _same_label(v, positive_label) else -1 for v in raw_labels])
    if not np.any(y == 1):
        raise DataError(f"{path}: empty class (no rows labeled {positive_label!r})")
    if not np.any(y == -1):
        raise DataError(f"{path}: empty class (every row labeled {positive_label!r})")
    return Dataset(np.array(feats, dtype=float), y, syn or None,
                   name=name or path.stem)


def load_keel(path, positive_label="positive", label_column=-1, **kw) -> Dataset:
    """Read a KEEL ``.dat`` file: ``@`` lines are skipped, the rest is CSV."""
    return load_csv(path, label_column=label_column, positive_label=positive_label,
                    comment="@", header=False, **kw)


def load_dataset(path, label_column=-1, positive_label=None, **kw) -> Dataset:
    """Dispatch on the extension (``.dat`` is KEEL, anything else CSV)."""
    path = Path(path)
    if path.suffix.lower() == ".dat":
        return load_keel(path, positive_label=positive_label or "positive",
                         label_column=label_column, **kw)
    return load_csv(path, label_column=label_column,
                    positive_label="1" if positive_label is None else positive_label, **kw)


def save_csv(data: Dataset, path, provenance: bool | None = None) -> None:
    """Write features and label (+1/-1) as CSV with a header row.

    A ``provenance`` column is added when the dataset contains synthetic
    points, or when forced with ``provenance=True``.
    """
    if provenance is None:
        provenance = data.n_synthetic > 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        head = [f"x{j}" for j in range(data.p)] + ["label"]
        if provenance:
            head.append("provenance")
        w.writerow(head)
        for i in range(len(data)):
            row = [repr(float(v)) for v in data.features[i]] + [int(data.labels[i])]
            if provenance:
                row.append(data.provenance(i).value)
            w.writerow(row)


# ---------------------------------------------------------------------------
# Normalization


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).ravel()
        hi = np.asarray(self.max, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise DataError("normalization requires min <= max per feature")
        object.__setattr__(self, "min", _frozen(lo))
        object.__setattr__(self, "max", _frozen(hi))


def fit_normalizer(train: Dataset) -> NormalizationParams:
    if len(train) < 1:
        raise DataError("cannot fit a normalizer on an empty dataset")
    return NormalizationParams(train.features.min(axis=0), train.features.max(axis=0))


def normalize_features(X: np.ndarray, params: NormalizationParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != len(params.min):
        raise DataError(
            f"dimension mismatch: data has {X.shape[-1]} features, "
            f"normalizer has {len(params.min)}")
    span = params.max - params.min
    const = span == 0
    scaled = 2.0 * (X - params.min) / np.where(const, 1.0, span) - 1.0
    # constant training features carry no information; map them to 0
    return np.where(const, 0.0, scaled)


def apply_normalizer(data: Dataset, params: NormalizationParams) -> Dataset:
    """Map each feature to [-1, 1] using training min/max (no clamping)."""
    return Dataset(normalize_features(data.features, params), data.labels,
                   data.synthetic, data.name, data.origin)


# ---------------------------------------------------------------------------
# Splitting


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def _class_indices(data: Dataset):
    return np.flatnonzero(data.labels == 1), np.flatnonzero(data.labels == -1)


def stratified_split(data: Dataset, test_fraction: float = 0.2,
                     seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified random train/test split.

    Each class contributes ``round_half_up(test_fraction * m_c)`` points to the
    test side, clipped to ``[1, m_c - 1]`` so both sides see both classes.
    Row order is preserved within each side.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for label, idx in zip((1, -1), _class_indices(data)):
        if len(idx) < 2:
            raise DataError(
                f"class {label:+d} has {len(idx)} point(s); a stratified split "
                "needs at least 2")
        n_test = min(max(1, _round_half_up(test_fraction * len(idx))), len(idx) - 1)
        test_idx.append(rng.permutation(idx)[:n_test])
    test_mask = np.zeros(len(data), dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    return (data.subset(np.flatnonzero(~test_mask)),
            data.subset(np.flatnonzero(test_mask)))


def stratified_fold_indices(labels: np.ndarray, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Validation index sets of a stratified k-fold partition.

    Positives then negatives (each shuffled) are dealt round-robin over the
    folds, so fold sizes and per-class counts differ by at most one.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    smallest = min(len(pos), len(neg))
    if smallest < folds:
        raise DataError(
            f"smallest class has {smallest} point(s) but {folds} folds were "
            f"requested; reduce folds to at most {smallest}")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    return [np.sort(order[f::folds]) for f in range(folds)]


def stratified_kfold(data: Dataset, folds: int = 10,
                     seed: int = 0) -> list[tuple[Dataset, Dataset]]:
    """Stratified k-fold: list of ``(train, validation)`` pairs."""
    out = []
    all_idx = np.arange(len(data))
    for val in stratified_fold_indices(data.labels, folds, seed):
        train = np.setdiff1d(all_idx, val, assume_unique=True)
        out.append((data.subset(train), data.subset(val)))
    return out


def subsample_minority(data: Dataset, keep_fraction: float, seed: int = 0) -> Dataset:
    """Keep ``ceil(keep_fraction * m+)`` positives chosen uniformly at random.

    Negatives are untouched.  For a fixed seed the kept positives are nested:
    a smaller fraction keeps a subset of what a larger one keeps.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in (0, 1]")
    pos, _ = _class_indices(data)
    n_keep = math.ceil(keep_fraction * len(pos) - 1e-9)
    if n_keep < 1:
        raise DataError("subsampling would leave no positive examples")
    if n_keep == len(pos):
        return data
    rng = np.random.default_rng(seed)
    kept = rng.permutation(pos)[:n_keep]
    mask = data.labels == -1
    mask[kept] = True
    return data.subset(np.flatnonzero(mask))


__all__: Sequence[str] = [
    "DataError", "Provenance", "Dataset", "NormalizationParams", "concat",
    "read_table", "read_numeric_table", "load_csv", "load_keel", "load_dataset",
    "save_csv", "fit_normalizer", "apply_normalizer", "normalize_features",
    "stratified_split", "stratified_kfold", "stratified_fold_indices",
    "subsample_minority",
]
