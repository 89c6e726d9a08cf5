import math

import numpy as np
import pytest

from preyhandling.data import SynthConfig, synthesize
from preyhandling.evaluation import (
    CellResult,
    ConfusionMatrix,
    EvaluationReport,
    GridSpec,
    StreamData,
    TabularData,
    grid_search,
    kfold_split,
    metrics,
    paper_grid,
    quick_grid,
    select_best,
    split_average,
    stratified_split,
    stream_segments,
)
from preyhandling.exceptions import TrainingError


def test_metrics_hand_example():
    m = metrics(ConfusionMatrix(tp=3, tn=4, fp=1, fn=2))
    assert m.accuracy == pytest.approx(0.7)
    assert m.precision == pytest.approx(0.75)
    assert m.recall == pytest.approx(0.6)
    assert m.f1 == pytest.approx(2 / 3)


def test_metrics_edge_cases():
    assert metrics(ConfusionMatrix(tp=5, tn=3)) == (1.0, 1.0, 1.0, 1.0)
    neg = metrics(ConfusionMatrix(tn=4, fn=3))
    assert neg.recall == 0.0 and neg.f1 == 0.0 and neg.precision == 0.0
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix())
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1)


def test_metrics_bounds():
    rng = np.random.default_rng(0)
    for _ in range(200):
        cm = ConfusionMatrix(*rng.integers(0, 5, 4).tolist())
        if cm.total == 0:
            continue
        m = metrics(cm)
        assert 0 <= m.accuracy <= 1 and 0 <= m.f1 <= 1
        assert (m.f1 == 1.0) == (cm.fp == 0 and cm.fn == 0 and cm.tp > 0)


def test_confusion_from_labels():
    cm = ConfusionMatrix.from_labels([1, 1, -1, -1, 1], [1, -1, -1, 1, 1])
    assert cm == ConfusionMatrix(tp=2, tn=1, fp=1, fn=1)
    assert cm.total == 5
    with pytest.raises(ValueError):
        ConfusionMatrix.from_labels([1], [1, 1])


def test_kfold_partition():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(2, 60))
        k = int(rng.integers(2, n + 1))
        folds = kfold_split(n, k, seed=int(rng.integers(1000)))
        assert len(folds) == k
        flat = np.concatenate(folds)
        assert sorted(flat.tolist()) == list(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1


def test_kfold_loo_and_determinism():
    assert all(len(f) == 1 for f in kfold_split(7, 7, 0))
    a, b = kfold_split(50, 10, 3), kfold_split(50, 10, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = kfold_split(50, 10, 4)
    assert [len(f) for f in a] == [len(f) for f in c]
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))
    for bad in (1, 51):
        with pytest.raises(ValueError):
            kfold_split(50, bad)


def test_stratified_split():
    y = np.array([1] * 50 + [-1] * 50)
    tr, te = stratified_split(y, 0.3, seed=0)
    assert len(tr) == 70 and len(te) == 30
    assert (y[te] == 1).sum() == 15
    assert set(tr).isdisjoint(te) and len(set(tr) | set(te)) == 100
    y = np.array([1] * 37 + [-1] * 63)
    tr, te = stratified_split(y, 0.3, seed=5)
    assert len(te) == 30 and (y[te] == 1).sum() in (11, 12)


def test_grid_sizes():
    assert paper_grid("idnn").size == 1400 == len(paper_grid("idnn").cells())
    assert paper_grid("svm").size == 12
    assert paper_grid("esn").size == 80
    g = paper_grid("idnn")
    assert g.params["n_hidden"] == [1, 2, 3, 4, 5, 50, 100]
    assert g.params["eta"] == [0.1, 0.01, 0.001, 0.0001]
    assert g.params["weight_decay"] == [0.0, 0.0001, 0.001, 0.01, 0.1]
    assert paper_grid("svm").params["C"] == [100.0, 10.0, 1.0, 0.5]
    assert g.fixed["epochs"] == 1000


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec("svm", {"gamma": [1.0]})
    with pytest.raises(ValueError):
        GridSpec("svm", {"C": []})
    with pytest.raises(ValueError):
        GridSpec("knn", {})


def two_blobs(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-2, 1, (n // 2, 2)), rng.normal(2, 1, (n // 2, 2))])
    y = np.array([-1] * (n // 2) + [1] * (n // 2))
    return X, y


def test_single_cell_grid():
    X, y = two_blobs()
    res = grid_search(GridSpec("svm", {"C": [1.0]}, {"kernel": "linear"}), (X, y), k=5)
    assert res.best.index == 0 and res.best_params == {"C": 1.0}
    assert len(res.best.fold_acc) == 5


def test_nonlinear_task_prefers_more_hidden_units():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (120, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, 1, -1)
    grid = GridSpec("idnn", {"n_hidden": [1, 5]}, {"epochs": 300})
    res = grid_search(grid, (X, y), k=5, seed=0)
    accs = {c.params["n_hidden"]: c.mean_val_acc for c in res.cells}
    assert accs[5] > accs[1] + 0.15
    assert res.best_params["n_hidden"] == 5


def test_tie_break_footprint_then_order():
    a = CellResult(0, {"x": 0}, 0.9, 5.0, (0.9,), ())
    b = CellResult(1, {"x": 1}, 0.9, 2.0, (0.9,), ())
    c = CellResult(2, {"x": 2}, 0.9, 2.0, (0.9,), ())
    d = CellResult(3, {"x": 3}, math.nan, math.nan, (), ("err",))
    assert select_best([a, b, c, d]).index == 1
    assert select_best([c, b, a, d]).index == 1
    with pytest.raises(TrainingError):
        select_best([d])


def test_failing_cells_are_recorded():
    X, y = two_blobs(20)
    # a zero pass budget makes every fold fail to converge
    grid = GridSpec("svm", {"max_passes": [0, 10000]}, {"kernel": "rbf", "C": 100.0, "tol": 1e-9})
    res = grid_search(grid, (X, y), k=4)
    assert res.cells[0].failed and len(res.cells[0].errors) == 4
    assert "ConvergenceError" in res.cells[0].errors[0]
    assert res.best.index == 1


def test_grid_search_needs_both_classes():
    X, _ = two_blobs(20)
    with pytest.raises(TrainingError):
        grid_search(quick_grid("svm"), (X, np.ones(20)), k=2)


def test_grid_search_parallel_matches_serial():
    X, y = two_blobs(40, seed=3)
    g = quick_grid("svm")
    a = grid_search(g, (X, y), k=4, seed=1, n_jobs=1)
    b = grid_search(g, (X, y), k=4, seed=1, n_jobs=2)
    assert a.rows() == b.rows()


def test_split_average_report():
    X, y = two_blobs(100)
    rep = split_average(quick_grid("svm"), TabularData(X, y), n_splits=3, k=3, seed=2)
    assert rep.n_splits == 3 and [s.seed for s in rep.splits] == [2, 3, 4]
    assert rep.acc_std >= 0 and rep.f1_std >= 0
    for s in rep.splits:
        assert s.confusion.total == 30
    lines = rep.to_csv().splitlines()
    assert lines[0] == "family,split,kernel,C,mean_val_acc,test_acc,test_f1,acc_std,f1_std,footprint_kb"
    assert len(lines) == 5 and lines[-1].startswith("svm,mean,")
    assert rep.to_csv() == split_average(quick_grid("svm"), TabularData(X, y), n_splits=3, k=3, seed=2).to_csv()
    assert '"rows"' in rep.to_json()


def test_split_std_zero_for_perfect_predictor():
    X, y = two_blobs(60)
    X = X * 100
    rep = split_average(GridSpec("svm", {"C": [1.0]}, {"kernel": "linear"}), (X, y), n_splits=4, k=3)
    assert rep.acc_mean == 1.0 and rep.acc_std == 0.0


def test_stream_segments_and_esn_selection():
    ts = synthesize(SynthConfig(duration=200))
    data = stream_segments(ts, 10.0)
    assert isinstance(data, StreamData) and len(data) == 20
    assert all(len(s) == 250 for s in data.segments)
    assert set(np.unique(data.strata)) == {-1, 1}
    rep = split_average(GridSpec("esn", {"n_reservoir": [5]}), data, n_splits=2, k=3)
    assert rep.splits[0].confusion.total == 6 * 250
    assert rep.acc_mean > 0.8
    with pytest.raises(ValueError):
        stream_segments(synthesize(SynthConfig(duration=10)), 10.0)
