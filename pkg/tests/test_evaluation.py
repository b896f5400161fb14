import json
import logging
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gammaknn.evaluation as ev
from gammaknn.dataset import Dataset, DataError
from gammaknn.datasets import load_fixture, two_gaussians
from gammaknn.evaluation import (EvalReport, RunRecord, TuningGrid, cv_score_grid,
                                 format_table, gamma_ir_sweep, run_experiment, spearman,
                                 tune_gamma)
from gammaknn.metrics import (ConfusionCounts, confusion, f1_score, f_measure,
                              imbalance_ratio, precision_recall)
from gammaknn.sampling import SamplerConfig, Strategy


def counts_dataset(n_pos, n_neg):
    return Dataset(np.zeros((n_pos + n_neg, 1)), np.r_[np.ones(n_pos), -np.ones(n_neg)])


# -- metrics -----------------------------------------------------------------


def test_confusion_examples():
    assert confusion([1, 1, -1], [1, -1, -1]) == ConfusionCounts(tp=1, fp=0, fn=1, tn=1)
    c = confusion([1, -1, 1, -1], [1, -1, 1, -1])
    assert c.fp == 0 and c.fn == 0 and c.total == 4
    c = confusion([-1] * 5, [1] * 5)
    assert (c.fp, c.tn) == (5, 0)
    with pytest.raises(ValueError):
        confusion([1, -1], [1])


def test_f_measure_examples():
    assert f_measure(ConfusionCounts(tp=2, fp=1, fn=1)) == pytest.approx(4 / 6, abs=1e-15)
    assert f_measure(ConfusionCounts()) == 0.0
    assert f1_score([1, 1, -1], [1, -1, -1]) == pytest.approx(2 / 3)


def test_precision_recall_examples():
    assert precision_recall(ConfusionCounts(tp=8, fp=2, fn=2)) == (0.8, 0.8)
    assert precision_recall(ConfusionCounts(tp=0, fp=5))[0] == 0.0
    assert precision_recall(ConfusionCounts(tp=3, fn=0))[1] == 1.0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000))
def test_f1_is_harmonic_mean(tp, fp, fn):
    c = ConfusionCounts(tp=tp, fp=fp, fn=fn)
    p, r = precision_recall(c)
    if p + r > 0:
        assert f_measure(c) == pytest.approx(2 * p * r / (p + r), rel=1e-12, abs=1e-15)


def test_imbalance_ratio_examples():
    assert imbalance_ratio(counts_dataset(7, 7)) == 1.0
    # abalone8: 568 of 4177 positive (13.6%)
    ir = imbalance_ratio(counts_dataset(568, 4177 - 568))
    assert round(100 * 568 / 4177, 1) == 13.6 and ir == pytest.approx(6.354, abs=1e-3)
    assert round(ir, 1) == 6.4
    # balance: 288 of 625 positive (46.1%)
    ir = imbalance_ratio(counts_dataset(288, 625 - 288))
    assert round(100 * 288 / 625, 1) == 46.1 and round(ir, 2) == 1.17 and round(ir, 1) == 1.2
    with pytest.raises(DataError):
        imbalance_ratio(counts_dataset(0, 3))


# -- grids and tuning ----------------------------------------------------------


def test_default_grids():
    g = TuningGrid()
    assert g.gamma_real_values == tuple(round(0.1 * i, 10) for i in range(1, 11))
    assert g.gamma_synth_values[0] == 0.1 and g.gamma_synth_values[-1] == 2.0
    assert len(g.gamma_synth_values) == 20
    assert g.ratio_values == g.gamma_real_values
    with pytest.raises(ValueError):
        TuningGrid(gamma_real_values=(0.0, 0.5))


def small(ir=5, n_neg=150, seed=3):
    return two_gaussians(ir, n_neg=n_neg, seed=seed)


def test_single_point_grid():
    d = small()
    t = tune_gamma(d, 3, TuningGrid((0.4,), (1.3,), (0.5,)), folds=5)
    assert (t.gamma_real, t.gamma_synth, t.ratio) == (0.4, 0.4, None)
    t = tune_gamma(d, 3, TuningGrid((0.4,), (1.3,), (0.5,)),
                   SamplerConfig(Strategy.SMOTE, 0.5), folds=5)
    assert (t.gamma_real, t.gamma_synth, t.ratio) == (0.4, 1.3, 0.5)


def test_tuned_gamma_regression_fixtures():
    # pinned values computed by this harness (10 folds, seed 0, default grid)
    balanced = tune_gamma(load_fixture("ir1"))
    assert balanced.gamma_real == 1.0
    assert balanced.cv_f1 == pytest.approx(0.9167692627677233, abs=1e-12)
    skewed = tune_gamma(load_fixture("ir20"))
    assert skewed.gamma_real == 0.6 and skewed.gamma_real < 1.0
    assert skewed.cv_f1 == pytest.approx(0.4986868686868687, abs=1e-12)


def test_tie_breaks():
    grid = ev.ScoreGrid(ratios=(0.2, 0.5), gamma_real=(0.5, 1.0), gamma_synth=(0.8, 1.1, 1.5),
                        scores=np.full((2, 2, 3), 0.5), synthetic_seen=np.array([True, True]),
                        folds=5)
    assert grid.best() == (1.0, 1.1, 0.2, 0.5)
    # float noise below 1e-12 is treated as a tie
    scores = np.full((1, 2, 1), 0.5)
    scores[0, 0, 0] += 1e-15
    grid = ev.ScoreGrid((None,), (0.5, 1.0), (None,), scores, np.array([False]), 5)
    assert grid.best().gamma_real == 1.0


def test_gamma_synth_follows_real_without_synthetics():
    t = tune_gamma(small(), 3, TuningGrid((0.5, 1.0), (0.3, 1.7)), folds=5)
    assert t.gamma_synth == t.gamma_real and t.ratio is None


def test_folds_auto_reduced_with_warning(caplog):
    d = two_gaussians(20, n_neg=100, seed=1)   # 5 positives
    with caplog.at_level(logging.WARNING, logger="gammaknn.evaluation"):
        g = cv_score_grid(d, 3, TuningGrid((1.0,), (1.0,)), folds=10)
    assert g.folds == 5
    assert any("reducing CV folds" in r.message for r in caplog.records)


def test_no_validation_row_reaches_fit_or_sampler(monkeypatch):
    d = small(ir=4, n_neg=120)
    seen = []
    real_resample = ev.resample

    def spy(train, config, **kw):
        seen.append(("sampler", set(train.origin.tolist())))
        return real_resample(train, config, **kw)

    monkeypatch.setattr(ev, "resample", spy)
    folds = {}

    def hook(f, val_idx, fit_input):
        folds[f] = set(val_idx.tolist())
        assert not folds[f] & set(fit_input.origin.tolist())
        assert len(fit_input) + len(val_idx) == len(d)
        # normalizer was fit on these rows only: they fill the unit box exactly
        assert fit_input.features.min() == -1.0 and fit_input.features.max() == 1.0
        seen.append(("fold", f))

    cv_score_grid(d, 3, TuningGrid((0.5, 1.0), (1.0,), (0.5, 0.8)),
                  SamplerConfig(Strategy.SMOTE, 0.5), folds=5, on_fold=hook)
    assert sorted(set().union(*folds.values())) == list(range(len(d)))
    current = None
    n_sampler_calls = 0
    for kind, payload in seen:
        if kind == "fold":
            current = payload
        else:
            n_sampler_calls += 1
            synthetic_free = {i for i in payload if i >= 0}
            assert not synthetic_free & folds[current]
    assert n_sampler_calls == 10


@settings(max_examples=8, deadline=None)
@given(st.sets(st.sampled_from([0.2, 0.4, 0.6, 0.8, 1.0]), min_size=1, max_size=3),
       st.sets(st.sampled_from([0.3, 0.5, 0.7, 0.9]), min_size=1, max_size=3))
def test_bigger_grid_never_scores_lower(base, extra):
    d = small(seed=11)
    a = tune_gamma(d, 3, TuningGrid(tuple(sorted(base))), folds=4, seed=2)
    b = tune_gamma(d, 3, TuningGrid(tuple(sorted(base | extra))), folds=4, seed=2)
    assert b.cv_f1 >= a.cv_f1


def test_sequential_tuning_restricts_ratio():
    d = small(ir=6, n_neg=120)
    grid = TuningGrid((0.5, 1.0), (0.5, 1.5), (0.3, 0.6))
    t = tune_gamma(d, 3, grid, SamplerConfig(Strategy.SMOTE, 0.5), folds=4, sequential=True)
    assert t.ratio in (0.3, 0.6)


# -- reports -------------------------------------------------------------------


def record(f1, seed=0):
    return RunRecord(seed, 1.0, 1.0, None, ConfusionCounts(1, 1, 1, 1), f1, 0.5, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_report_arithmetic(values):
    rep = EvalReport("d", "knn", "none", 3, [record(v) for v in values])
    assert abs(rep.mean_f1 - statistics.fmean(values)) <= 1e-12
    expect = statistics.stdev(values) if len(values) > 1 else 0.0
    assert abs(rep.std_f1 - expect) <= 1e-12


def test_run_experiment_single_run_and_determinism():
    d = small()
    rep = run_experiment(d, "knn", runs=1, folds=5)
    assert rep.std_f1 == 0.0 and len(rep.per_run) == 1
    a = run_experiment(d, "gammaknn", runs=2, folds=5)
    b = run_experiment(d, "gammaknn", runs=2, folds=5)
    assert a.to_json() == b.to_json()
    assert [r.seed for r in a.per_run] == [0, 1]
    assert all(r.gamma_real is not None for r in a.per_run)
    for r in a.per_run:
        assert r.counts.total == 30 + 6
        assert r.f1 == f_measure(r.counts)


def test_run_experiment_with_sampler_and_rejections():
    d = small()
    rep = run_experiment(d, "gammaknn", SamplerConfig(Strategy.SMOTE, 0.5), runs=1, folds=4,
                         grid=TuningGrid((0.6, 1.0), (0.8, 1.2), (0.4, 0.8)))
    assert rep.sampler == "smote" and rep.method == "smote+gammaknn"
    assert rep.per_run[0].ratio in (0.4, 0.8)
    with pytest.raises(ValueError):
        run_experiment(d, "wknn", SamplerConfig(Strategy.SMOTE, 0.5))
    with pytest.raises(ValueError):
        run_experiment(d, "lmnn")
    with pytest.raises(ValueError):
        run_experiment(d, runs=0)


def test_report_json_round_trip(tmp_path):
    rep = run_experiment(small(), "wknn", runs=3)
    rep.save(tmp_path / "r.json")
    back = EvalReport.load(tmp_path / "r.json")
    assert back.to_dict() == rep.to_dict()
    assert json.loads(rep.to_json())["metadata"]["std"].startswith("sample standard deviation")


def test_format_table_layout():
    one = EvalReport("pima", "knn", "none", 3, [record(0.5)])
    text = format_table([one])
    assert text.splitlines()[0].split() == ["dataset", "knn"]
    assert "0.500 (0.000)" in text and "mean" not in text
    reps = [EvalReport(d, c, "none", 3, [record(v), record(v + 0.1)])
            for d in ("a", "b") for c, v in (("knn", 0.4), ("gammaknn", 0.6))]
    lines = format_table(reps).splitlines()
    assert lines[-1].split()[0] == "mean"
    assert "0.650" in lines[-1] and "0.450" in lines[-1]


# -- IR sweep ----------------------------------------------------------------


def test_ir_sweep_shape():
    d = two_gaussians(1, n_neg=200, seed=4)
    fr = [1.0, 0.5, 0.2]
    grid = TuningGrid((0.4, 0.7, 1.0))
    out = gamma_ir_sweep(d, fr, grid=grid, folds=5)
    assert [ir for ir, _ in out] == sorted(ir for ir, _ in out)
    assert out[0] == (imbalance_ratio(d), tune_gamma(d, 3, grid, None, 5, 0).gamma_real)
    with pytest.raises(ValueError):
        gamma_ir_sweep(d, [0.5, 1.0])


def test_spearman():
    assert spearman([(1, 3), (2, 2), (3, 1)]) == pytest.approx(-1.0)
    assert spearman([(1, 1), (2, 1)]) == 0.0
