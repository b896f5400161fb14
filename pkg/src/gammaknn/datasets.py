"""Bundled synthetic fixtures and locations of the public benchmark datasets.

Public datasets are not shipped.  ``load_public`` looks for the KEEL file in,
in order: an explicit ``data_dir``, ``$GAMMAKNN_DATA_DIR``, and the data
folder of the ``keel_ds`` package when it is installed
(``pip install --no-deps keel-ds``).  Otherwise it raises with the URL the
file can be downloaded from.
"""

from __future__ import annotations

import importlib.util
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, load_dataset, load_keel


def two_gaussians(imbalance_ratio: float, n_neg: int = 1000, dim: int = 2,
                  separation: float = 2.0, pos_scale: float = 1.0,
                  seed: int = 0, name: str | None = None) -> Dataset:
    """Negatives ~ N(0, I), positives ~ N(separation * e1, pos_scale^2 I).

    ``round(n_neg / imbalance_ratio)`` positives are drawn.
    """
    if imbalance_ratio <= 0:
        raise ValueError("imbalance_ratio must be positive")
    n_pos = max(2, int(round(n_neg / imbalance_ratio)))
    rng = np.random.default_rng(seed)
    neg = rng.standard_normal((n_neg, dim))
    mu = np.zeros(dim)
    mu[0] = separation
    pos = mu + pos_scale * rng.standard_normal((n_pos, dim))
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    order = rng.permutation(len(y))
    label = name or f"gauss-ir{imbalance_ratio:g}"
    return Dataset(X[order], y[order], name=label)


# The balanced fixture is well separated (nothing for gamma to correct); the
# imbalanced ones overlap so that the minority gets swamped by plain k-NN.
FIXTURES = {
    "ir1": dict(imbalance_ratio=1, separation=3.0, seed=101),
    "ir5": dict(imbalance_ratio=5, seed=105),
    "ir20": dict(imbalance_ratio=20, seed=120),
}


def load_fixture(name: str) -> Dataset:
    try:
        kw = FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return two_gaussians(name=f"gauss-{name}", **kw)


def ir_family(n: int = 5000, seed: int = 7) -> Dataset:
    """Balanced two-Gaussian set (``n`` points per class) for minority thinning.

    Sized so that the 80% training portion thinned to IR = 40 still holds
    100 positives, i.e. 10 per validation fold under 10-fold tuning.
    """
    return two_gaussians(1.0, n_neg=n, separation=2.0, seed=seed, name="gauss-family")


@dataclass(frozen=True)
class PublicDataset:
    keel_file: str | None
    positive_label: str
    url: str


_KEEL_IMB = "https://sci2s.ugr.es/keel/dataset/data/imbalanced/{}.zip"
_KEEL_STD = "https://sci2s.ugr.es/keel/dataset/data/classification/{}.zip"
_UCI = "https://archive.ics.uci.edu/dataset/{}"

# Name in the benchmark table -> KEEL file (relative to keel_ds/data) and label.
PUBLIC = {
    "pima": PublicDataset("imbalanced/raw/pima.dat", "positive", _KEEL_IMB.format("pima")),
    "glass": PublicDataset("imbalanced/raw/glass0.dat", "positive", _KEEL_IMB.format("glass0")),
    "vehicle": PublicDataset("imbalanced/raw/vehicle0.dat", "positive", _KEEL_IMB.format("vehicle0")),
    "segmentation": PublicDataset("imbalanced/raw/segment0.dat", "positive", _KEEL_IMB.format("segment0")),
    "yeast3": PublicDataset("imbalanced/raw/yeast3.dat", "positive", _KEEL_IMB.format("yeast3")),
    "pageblocks": PublicDataset("imbalanced/raw/page-blocks0.dat", "positive", _KEEL_IMB.format("page-blocks0")),
    "wine4": PublicDataset("imbalanced/raw/winequality-red-4.dat", "positive", _KEEL_IMB.format("winequality-red-4")),
    "yeast6": PublicDataset("imbalanced/raw/yeast6.dat", "positive", _KEEL_IMB.format("yeast6")),
    "wine": PublicDataset("balanced/raw/wine.dat", "1", _KEEL_STD.format("wine")),
    "ionosphere": PublicDataset("balanced/raw/ionosphere.dat", "b", _KEEL_STD.format("ionosphere")),
    "satimage": PublicDataset("balanced/raw/satimage.dat", "4", _KEEL_STD.format("satimage")),
    "libras": PublicDataset("balanced/raw/movement_libras.dat", "1", _KEEL_STD.format("movement_libras")),
    # not available as numeric KEEL files; download and convert by hand
    "balance": PublicDataset(None, "B", _UCI.format("12/balance+scale")),
    "autompg": PublicDataset(None, "1", _UCI.format("9/auto+mpg")),
    "abalone8": PublicDataset(None, "8", _UCI.format("1/abalone")),
    "abalone17": PublicDataset(None, "17", _UCI.format("1/abalone")),
    "abalone20": PublicDataset(None, "20", _UCI.format("1/abalone")),
}


def _keel_ds_root() -> Path | None:
    spec = importlib.util.find_spec("keel_ds")
    if spec is None or not spec.submodule_search_locations:
        return None
    return Path(list(spec.submodule_search_locations)[0]) / "data"


def find_public(name: str, data_dir=None) -> Path:
    """Path of the local file for a public dataset, or FileNotFoundError."""
    try:
        entry = PUBLIC[name]
    except KeyError:
        raise ValueError(f"unknown public dataset {name!r}; choose from {sorted(PUBLIC)}") from None
    candidates = []
    for d in (data_dir, os.environ.get("GAMMAKNN_DATA_DIR")):
        if d:
            candidates += [Path(d) / f"{name}.dat", Path(d) / f"{name}.csv"]
            if entry.keel_file:
                candidates.append(Path(d) / Path(entry.keel_file).name)
    root = _keel_ds_root()
    if root is not None and entry.keel_file:
        candidates.append(root / entry.keel_file)
    for c in candidates:
        if c.exists():
            return c
    raise FileNotFoundError(
        f"public dataset {name!r} not found locally; download it from {entry.url} "
        f"into $GAMMAKNN_DATA_DIR as {name}.dat (label in the last column)")


def load_public(name: str, data_dir=None) -> Dataset:
    path = find_public(name, data_dir)
    return load_keel(path, positive_label=PUBLIC[name].positive_label, name=name,
                     one_vs_rest=True)


def resolve(spec: str, positive_label=None, label_column=-1) -> Dataset:
    """Load ``fixture:<name>``, ``public:<name>`` or a file path."""
    if spec.startswith("fixture:"):
        return load_fixture(spec.split(":", 1)[1])
    if spec.startswith("public:"):
        return load_public(spec.split(":", 1)[1])
    return load_dataset(spec, label_column=label_column, positive_label=positive_label)
