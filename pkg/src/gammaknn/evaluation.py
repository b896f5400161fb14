"""Cross-validated tuning, repeated train/test experiments and report output.

Protocol of one experiment run: stratified 80/20 split, min-max normalizer
fit on the training part, hyperparameters tuned by stratified k-fold CV on
the training part (normalizer and sampler refit inside every CV fold), final
model refit on the whole training part and scored on the test part.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .classifiers import CLASSIFIERS, candidate_neighbors, gamma_votes, make_classifier
from .dataset import (Dataset, DataError, apply_normalizer, fit_normalizer,
                      stratified_fold_indices, stratified_split, subsample_minority)
from .metrics import ConfusionCounts, confusion, f_measure, imbalance_ratio, precision_recall
from .neighbors import GammaDistanceParams
from .sampling import SamplerConfig, resample

log = logging.getLogger(__name__)


def _steps(lo: float, hi: float, step: float = 0.1) -> tuple[float, ...]:
    n = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(n + 1))


@dataclass(frozen=True)
class TuningGrid:
    gamma_real_values: tuple[float, ...] = _steps(0.1, 1.0)
    gamma_synth_values: tuple[float, ...] = _steps(0.1, 2.0)
    ratio_values: tuple[float, ...] = _steps(0.1, 1.0)

    def __post_init__(self):
        for name in ("gamma_real_values", "gamma_synth_values", "ratio_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} is empty")
            if any(v <= 0 for v in vals):
                raise ValueError(f"{name} must be strictly positive")
            object.__setattr__(self, name, vals)


class Tuned(NamedTuple):
    gamma_real: float
    gamma_synth: float
    ratio: float | None
    cv_f1: float


@dataclass(frozen=True, eq=False)
class ScoreGrid:
    """Mean CV F1 for every (ratio, gamma_real, gamma_synth) combination.

    ``ratios`` holds ``None`` when no sampler is used; ``gamma_synth`` holds
    ``None`` when synthetic points cannot occur.
    """

    ratios: tuple
    gamma_real: tuple
    gamma_synth: tuple
    scores: np.ndarray
    synthetic_seen: np.ndarray
    folds: int

    def best(self) -> Tuned:
        """Argmax with deterministic tie-breaks.

        Ties prefer larger gamma_real, then gamma_synth closer to 1, then a
        smaller sampling ratio.
        """
        best_key, best = None, None
        for ri, r in enumerate(self.ratios):
            for gi, gr in enumerate(self.gamma_real):
                for si, gs in enumerate(self.gamma_synth):
                    score = float(self.scores[ri, gi, si])
                    key = (round(score, 12), gr,
                           0.0 if gs is None else -abs(gs - 1.0),
                           0.0 if r is None else -r)
                    if best_key is None or key > best_key:
                        best_key, best = key, (r, gr, gs, score)
        r, gr, gs, score = best
        ri = self.ratios.index(r)
        if gs is None or not self.synthetic_seen[ri]:
            gs = gr
        return Tuned(gr, gs, r, score)


def effective_folds(train: Dataset, folds: int) -> int:
    smallest = min(train.n_pos, train.n_neg)
    if smallest < 2:
        raise DataError(f"{train.name}: cross-validation needs >= 2 points per class")
    if smallest < folds:
        log.warning("%s: smallest class has %d points, reducing CV folds from %d to %d",
                    train.name, smallest, folds, smallest)
        return smallest
    return folds


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


FoldHook = Callable[[int, np.ndarray, Dataset], None]


def cv_score_grid(train: Dataset, k: int, grid: TuningGrid,
                  sampler: SamplerConfig | None = None, folds: int = 10,
                  seed: int = 0, on_fold: FoldHook | None = None) -> ScoreGrid:
    """Mean validation F1 of gamma-kNN over a stratified k-fold split.

    Inside each fold the normalizer and the sampler see only the fold's
    training rows.  Sampler seeds depend on the fold only, so the score of a
    grid point does not depend on the rest of the grid.  ``on_fold`` receives
    ``(fold, validation_rows, fit_input)`` where ``fit_input.origin`` holds the
    row ids (into ``train``) the normalizer and sampler were fit on.
    """
    train.check_trainable()
    n_folds = effective_folds(train, folds)
    fold_sets = stratified_fold_indices(train.labels, n_folds, seed)
    base_ratio = train.n_pos / train.n_neg
    if sampler is None:
        ratios, synth = (None,), (None,)
    else:
        ratios = tuple(r for r in grid.ratio_values if r > base_ratio)
        if not ratios:
            log.warning("%s: no ratio in the grid exceeds m+/m- = %.3f; sampling disabled",
                        train.name, base_ratio)
            ratios = (None,)
        synth = grid.gamma_synth_values
    reals = grid.gamma_real_values
    scores = np.zeros((len(ratios), len(reals), len(synth)))
    seen = np.zeros(len(ratios), dtype=bool)
    rows = np.arange(len(train))

    for f, val_idx in enumerate(fold_sets):
        tr_idx = np.setdiff1d(rows, val_idx, assume_unique=True)
        tr = train.subset(tr_idx)
        tr = Dataset(tr.features, tr.labels, tr.synthetic, tr.name, origin=tr_idx)
        norm = fit_normalizer(tr)
        tr = apply_normalizer(tr, norm)
        if on_fold is not None:
            on_fold(f, val_idx, tr)
        va = apply_normalizer(train.subset(val_idx), norm)
        fold_seed = derive_seed(seed, f)
        for ri, r in enumerate(ratios):
            fit = tr
            if r is not None and tr.n_pos >= 2 and r > tr.n_pos / tr.n_neg:
                fit = resample(tr, sampler.replace(target_ratio=r, seed=fold_seed))
            seen[ri] |= fit.n_synthetic > 0
            cand = candidate_neighbors(fit, va.features, k)
            for gi, gr in enumerate(reals):
                for si, gs in enumerate(synth):
                    votes = gamma_votes(cand, GammaDistanceParams(gr, gs), k)
                    pred = np.where(votes >= k / 2.0, 1, -1)
                    scores[ri, gi, si] += f_measure(confusion(va.labels, pred))
    scores /= n_folds
    return ScoreGrid(ratios, reals, synth, scores, seen, n_folds)


def tune_gamma(train: Dataset, k: int = 3, grid: TuningGrid | None = None,
               sampler: SamplerConfig | None = None, folds: int = 10, seed: int = 0,
               sequential: bool = False, on_fold: FoldHook | None = None) -> Tuned:
    """Pick ``(gamma_real, gamma_synth, ratio)`` maximizing mean CV F1.

    With a sampler, the ratio and both gammas are searched jointly unless
    ``sequential`` is set, in which case the ratio is chosen first with both
    gammas fixed at 1.
    """
    grid = grid or TuningGrid()
    if sequential and sampler is not None:
        first = TuningGrid((1.0,), (1.0,), grid.ratio_values)
        ratio = cv_score_grid(train, k, first, sampler, folds, seed, on_fold).best().ratio
        if ratio is not None:
            grid = TuningGrid(grid.gamma_real_values, grid.gamma_synth_values, (ratio,))
    return cv_score_grid(train, k, grid, sampler, folds, seed, on_fold).best()


# ---------------------------------------------------------------------------
# Experiments


@dataclass
class RunRecord:
    seed: int
    gamma_real: float | None
    gamma_synth: float | None
    ratio: float | None
    counts: ConfusionCounts
    f1: float
    precision: float
    recall: float
    cv_f1: float | None = None


@dataclass
class EvalReport:
    dataset: str
    classifier: str
    sampler: str
    k: int
    per_run: list[RunRecord]
    mean_f1: float = 0.0
    std_f1: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f1 = np.array([r.f1 for r in self.per_run], dtype=float)
        if len(f1):
            self.mean_f1 = float(f1.mean())
            self.std_f1 = float(f1.std(ddof=1)) if len(f1) > 1 else 0.0
        self.metadata.setdefault("std", "sample standard deviation (ddof=1) over runs")

    @property
    def method(self) -> str:
        return self.classifier if self.sampler == "none" else f"{self.sampler}+{self.classifier}"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        runs = [RunRecord(**{**r, "counts": ConfusionCounts(**r["counts"])})
                for r in d["per_run"]]
        rep = cls(d["dataset"], d["classifier"], d["sampler"], d["k"], runs,
                  metadata=dict(d.get("metadata", {})))
        return rep

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_json(Path(path).read_text())


def _fit_predict(name: str, train: Dataset, X, k: int, tuned: Tuned | None):
    params = {}
    if name == "gammaknn" and tuned is not None:
        params = dict(gamma_real=tuned.gamma_real, gamma_synth=tuned.gamma_synth)
    return make_classifier(name, k, **params).fit(train).predict(X)


def run_experiment(data: Dataset, classifier: str = "gammaknn",
                   sampler: SamplerConfig | None = None, k: int = 3, runs: int = 5,
                   base_seed: int = 0, grid: TuningGrid | None = None, folds: int = 10,
                   test_fraction: float = 0.2, sequential: bool = False) -> EvalReport:
    """Repeat split / normalize / tune / refit / test ``runs`` times.

    Only ``knn`` and ``gammaknn`` accept a sampler (the sampling ratio is then
    tuned as well).  ``gammaknn`` tunes its gammas; the other baselines have
    no hyperparameters.
    """
    if classifier not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {classifier!r}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if sampler is not None and classifier not in ("knn", "gammaknn"):
        raise ValueError(f"{classifier} does not combine with oversampling")
    grid = grid or TuningGrid()
    if classifier == "knn":
        grid = TuningGrid((1.0,), (1.0,), grid.ratio_values)

    records = []
    for r in range(runs):
        seed = base_seed + r
        train, test = stratified_split(data, test_fraction, seed)
        norm = fit_normalizer(train)
        train, test = apply_normalizer(train, norm), apply_normalizer(test, norm)
        tuned = None
        if classifier == "gammaknn" or sampler is not None:
            tuned = tune_gamma(train, k, grid, sampler, folds, seed, sequential)
        fit = train
        if sampler is not None and tuned.ratio is not None \
                and tuned.ratio > train.n_pos / train.n_neg:
            fit = resample(train, sampler.replace(target_ratio=tuned.ratio, seed=seed))
        pred = _fit_predict(classifier, fit, test.features, k, tuned)
        counts = confusion(test.labels, pred)
        precision, recall = precision_recall(counts)
        records.append(RunRecord(
            seed=seed,
            gamma_real=tuned.gamma_real if classifier == "gammaknn" else None,
            gamma_synth=tuned.gamma_synth if classifier == "gammaknn" else None,
            ratio=tuned.ratio if tuned else None,
            counts=counts, f1=f_measure(counts), precision=precision, recall=recall,
            cv_f1=tuned.cv_f1 if tuned else None,
        ))
        log.info("%s %s run %d: F1=%.3f", data.name, classifier, r, records[-1].f1)

    return EvalReport(
        dataset=data.name, classifier=classifier,
        sampler="none" if sampler is None else sampler.strategy.value,
        k=k, per_run=records,
        metadata={"folds": folds, "test_fraction": test_fraction, "base_seed": base_seed,
                  "tuning": "sequential" if sequential else "joint"},
    )


def format_table(reports: Sequence[EvalReport]) -> str:
    """Datasets as rows, methods as columns, ``mean (std)`` cells, plus a mean row."""
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    methods = list(dict.fromkeys(r.method for r in reports))
    cell = {(r.dataset, r.method): r for r in reports}
    rows = [["dataset", *methods]]
    for d in datasets:
        rows.append([d] + [f"{cell[d, m].mean_f1:.3f} ({cell[d, m].std_f1:.3f})"
                           if (d, m) in cell else "-" for m in methods])
    if len(datasets) > 1:
        mean_row = ["mean"]
        for m in methods:
            got = [cell[d, m] for d in datasets if (d, m) in cell]
            mean_row.append(f"{np.mean([g.mean_f1 for g in got]):.3f} "
                            f"({np.mean([g.std_f1 for g in got]):.3f})")
        rows.append(mean_row)
    widths = [max(len(row[j]) for row in rows) for j in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) if j == 0 else c.rjust(w)
                       for j, (c, w) in enumerate(zip(row, widths))) for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    if len(datasets) > 1:
        lines.insert(len(lines) - 1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def gamma_ir_sweep(data: Dataset, keep_fractions: Sequence[float], k: int = 3,
                   seed: int = 0, grid: TuningGrid | None = None,
                   folds: int = 10) -> list[tuple[float, float]]:
    """Tuned gamma_real as the minority class of ``data`` is thinned out.

    ``data`` is the training portion.  Subsamples share one seed, so each
    smaller fraction keeps a subset of the positives kept by the larger ones.
    Returns ``(imbalance_ratio, gamma_real)`` per fraction.
    """
    fr = [float(f) for f in keep_fractions]
    if any(a < b for a, b in zip(fr, fr[1:])):
        raise ValueError("keep_fractions must be in descending order")
    out = []
    for f in fr:
        sub = subsample_minority(data, f, seed)
        tuned = tune_gamma(sub, k, grid, None, folds, seed)
        out.append((imbalance_ratio(sub), tuned.gamma_real))
    return out


def spearman(pairs: Sequence[tuple[float, float]]) -> float:
    """Spearman rank correlation of the two columns of ``pairs``."""
    a, b = np.asarray(pairs, dtype=float).T
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    return float(stats.spearmanr(a, b).statistic)
