"""Metrics, k-fold cross-validation, grid search and multi-split averaging.

Validation schema: for each of ``n_splits`` seeds, a stratified 70/30
train/test split; a grid search by k-fold cross-validation on the train
part; the selected configuration retrained on the whole train part and
scored once on the test part. Accuracy and F1 are then averaged over the
splits. Split ``s`` of a run with base seed ``seed`` uses seed ``seed + s``
for both the split and its folds, so every model family sees the same
partitions and comparisons are paired.

Window families (IDNN, SVM) work on a feature or raw-window table. The ESN
works on a stream cut into contiguous segments (:func:`stream_segments`);
segments are the units that get split and folded, each is classified from
a reset reservoir, and accuracy is counted per timestep.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed

from .budget import footprint
from .data import TimeSeries
from .esn import ESNClassifier
from .exceptions import PreyHandlingError, TrainingError
from .idnn import IDNNClassifier
from .svm import SVMClassifier
from .windowing import label_window

FAMILIES = ("idnn", "svm", "esn")
DEFAULT_FOLDS = 10
DEFAULT_SPLITS = 5
DEFAULT_TEST_RATIO = 0.3
DEFAULT_SEGMENT_SECONDS = 20.0


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_labels(cls, y_true, y_pred):
        t = np.asarray(y_true).reshape(-1)
        p = np.asarray(y_pred).reshape(-1)
        if t.shape != p.shape:
            raise ValueError(f"{len(t)} true labels vs {len(p)} predictions")
        pos_t, pos_p = t == 1, p == 1
        return cls(
            int(np.sum(pos_t & pos_p)),
            int(np.sum(~pos_t & ~pos_p)),
            int(np.sum(~pos_t & pos_p)),
            int(np.sum(pos_t & ~pos_p)),
        )

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


class Metrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, recall and the harmonic-mean F1.

    Precision, recall and F1 are 0 when their denominators are 0.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    acc = (cm.tp + cm.tn) / cm.total
    prec = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    rec = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2.0 * prec * rec / (prec + rec) if prec + rec else 0.0
    return Metrics(acc, prec, rec, f1)


# --------------------------------------------------------------------------
# splitting


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def kfold_split(n, k=DEFAULT_FOLDS, seed=0):
    """``k`` disjoint sorted index folds covering ``range(n)``; sizes differ by at most 1."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = _rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def stratified_split(y, test_ratio=DEFAULT_TEST_RATIO, seed=0):
    """Class-stratified ``(train_idx, test_idx)``.

    The test part holds ``round(test_ratio * n)`` examples, allotted to
    classes by largest remainder so both parts keep the class proportions.
    """
    y = np.asarray(y).reshape(-1)
    n = len(y)
    if not 0 < test_ratio < 1:
        raise ValueError("test_ratio must be in (0, 1)")
    n_test = int(round(test_ratio * n))
    if n_test == 0 or n_test == n:
        raise ValueError(f"cannot split {n} examples at ratio {test_ratio}")
    classes = np.unique(y)
    members = [np.flatnonzero(y == c) for c in classes]
    quota = np.array([len(m) * n_test / n for m in members])
    alloc = np.floor(quota).astype(int)
    order = sorted(range(len(classes)), key=lambda i: (-(quota[i] - alloc[i]), i))
    for i in order[: n_test - alloc.sum()]:
        alloc[i] += 1
    rng = _rng(seed)
    test = []
    for m, a in zip(members, alloc):
        test.append(rng.permutation(m)[:a])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(n), test)
    return train, test


# --------------------------------------------------------------------------
# datasets


class TabularData:
    """Window or feature table: one example per row."""

    def __init__(self, X, y):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int).reshape(-1)
        if len(self.X) != len(self.y):
            raise ValueError("one label per row required")

    def __len__(self):
        return len(self.y)

    @property
    def strata(self):
        return self.y

    def take(self, idx):
        return self.X[idx], self.y[idx]

    @staticmethod
    def flatten(labels):
        return np.asarray(labels).reshape(-1)


class StreamData:
    """Contiguous stream segments; ``strata`` is each segment's majority label."""

    def __init__(self, segments, labels):
        self.segments = [np.asarray(s, dtype=float) for s in segments]
        self.labels = [np.asarray(v, dtype=int).reshape(-1) for v in labels]
        if len(self.segments) != len(self.labels):
            raise ValueError("one label array per segment required")
        self.strata = np.array([label_window(v) for v in self.labels], dtype=int)

    def __len__(self):
        return len(self.segments)

    def take(self, idx):
        return [self.segments[i] for i in idx], [self.labels[i] for i in idx]

    @staticmethod
    def flatten(labels):
        return np.concatenate([np.asarray(v).reshape(-1) for v in labels])


def stream_segments(series: TimeSeries, segment_seconds=DEFAULT_SEGMENT_SECONDS) -> StreamData:
    """Cut a stream into back-to-back segments; a trailing remainder is dropped."""
    size = int(round(segment_seconds * series.rate))
    if size < 1:
        raise ValueError("segment shorter than one sample")
    count = len(series) // size
    if count < 2:
        raise ValueError(f"stream of {len(series)} samples yields fewer than 2 segments of {size}")
    sl = [slice(i * size, (i + 1) * size) for i in range(count)]
    return StreamData([series.values[s] for s in sl], [series.labels[s] for s in sl])


# --------------------------------------------------------------------------
# grids


_ESTIMATORS = {"idnn": IDNNClassifier, "svm": SVMClassifier, "esn": ESNClassifier}


@dataclass(frozen=True)
class GridSpec:
    """Ordered hyperparameter candidates for one family.

    ``params`` maps estimator parameter names to candidate lists; cells are
    enumerated in row-major order over ``params``. ``fixed`` holds
    estimator parameters shared by every cell.
    """

    family: str
    params: dict
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        valid = _ESTIMATORS[self.family]().get_params()
        for name, values in {**self.params, **{k: [v] for k, v in self.fixed.items()}}.items():
            if name not in valid:
                raise ValueError(f"{self.family} has no hyperparameter {name!r}")
            if len(values) == 0:
                raise ValueError(f"empty candidate list for {name!r}")

    @property
    def names(self):
        return list(self.params)

    @property
    def size(self):
        return math.prod(len(v) for v in self.params.values())

    def cells(self):
        return [dict(zip(self.names, combo)) for combo in itertools.product(*self.params.values())]

    def make_estimator(self, cell):
        return _ESTIMATORS[self.family](**{**self.fixed, **cell})

    def with_fixed(self, **extra):
        return GridSpec(self.family, dict(self.params), {**self.fixed, **extra})


def paper_grid(family) -> GridSpec:
    """Full search space (1400 IDNN, 12 SVM, 80 ESN cells).

    IDNN: 7 x 4 x 5 x 5 x 2 = 1400 cells (momentum only affects the
    gradient-descent solver). ESN ranges are discretized as scaling
    {0.01, 0.1, 0.5, 1}, leaky {0.1, 0.3, 0.5, 0.7, 1}, units
    {5, 10, 50, 100}.
    """
    decay = [0.0, 0.0001, 0.001, 0.01, 0.1]
    if family == "idnn":
        return GridSpec(
            "idnn",
            {
                "n_hidden": [1, 2, 3, 4, 5, 50, 100],
                "eta": [0.1, 0.01, 0.001, 0.0001],
                "momentum": list(decay),
                "weight_decay": list(decay),
                "hidden_kind": ["sigmoid", "rbf"],
            },
            {"epochs": 1000},
        )
    if family == "svm":
        return GridSpec("svm", {"kernel": ["linear", "rbf", "poly3"], "C": [100.0, 10.0, 1.0, 0.5]})
    if family == "esn":
        return GridSpec(
            "esn",
            {
                "input_scaling": [0.01, 0.1, 0.5, 1.0],
                "leaky": [0.1, 0.3, 0.5, 0.7, 1.0],
                "n_reservoir": [5, 10, 50, 100],
            },
        )
    raise ValueError(f"family must be one of {FAMILIES}")


def quick_grid(family) -> GridSpec:
    """Small desk-scale grids covering the configurations the full grids select."""
    if family == "idnn":
        return GridSpec(
            "idnn",
            {"n_hidden": [5, 50], "hidden_kind": ["sigmoid", "rbf"]},
            {"eta": 0.1, "momentum": 0.0, "weight_decay": 0.0001, "epochs": 200},
        )
    if family == "svm":
        return GridSpec("svm", {"kernel": ["linear", "rbf", "poly3"], "C": [10.0, 1.0]})
    if family == "esn":
        return GridSpec("esn", {"n_reservoir": [5, 10], "input_scaling": [0.01, 0.1]}, {"leaky": 0.5})
    raise ValueError(f"family must be one of {FAMILIES}")


# --------------------------------------------------------------------------
# grid search


def _fit_score(grid, cell, data, train_idx, test_idx):
    """Fit one cell; returns (confusion matrix, footprint KB, fitted estimator)."""
    est = grid.make_estimator(cell)
    Xtr, ytr = data.take(train_idx)
    Xte, yte = data.take(test_idx)
    est.fit(Xtr, ytr)
    pred = data.flatten(est.predict(Xte))
    cm = ConfusionMatrix.from_labels(data.flatten(yte), pred)
    return cm, footprint(est).footprint_kb, est


def _fold_task(grid, cell, data, train_idx, val_idx):
    try:
        cm, kb, _ = _fit_score(grid, cell, data, train_idx, val_idx)
    except (PreyHandlingError, ValueError, ArithmeticError, RuntimeError) as exc:
        return None, None, f"{type(exc).__name__}: {exc}"
    return metrics(cm).accuracy, kb, None


@dataclass(frozen=True)
class CellResult:
    index: int
    params: dict
    mean_val_acc: float  # nan when every fold failed
    footprint_kb: float
    fold_acc: tuple
    errors: tuple  # one entry per failed fold

    @property
    def failed(self):
        return len(self.fold_acc) == 0


@dataclass(frozen=True)
class GridResult:
    family: str
    cells: tuple
    best: CellResult

    @property
    def best_params(self):
        return dict(self.best.params)

    def rows(self):
        return [
            {
                "family": self.family,
                "cell": c.index,
                **c.params,
                "mean_val_acc": c.mean_val_acc,
                "footprint_kb": c.footprint_kb,
                "failed_folds": len(c.errors),
            }
            for c in self.cells
        ]


def select_best(cells):
    """Highest mean validation accuracy; ties go to the smaller footprint, then grid order."""
    ok = [c for c in cells if not c.failed]
    if not ok:
        raise TrainingError("every grid cell failed on every fold")
    return min(ok, key=lambda c: (-c.mean_val_acc, c.footprint_kb, c.index))


def grid_search(grid: GridSpec, data, k=DEFAULT_FOLDS, seed=0, n_jobs=1) -> GridResult:
    """k-fold cross-validated search over every cell of ``grid``.

    ``data`` is a :class:`TabularData`, a :class:`StreamData` or an
    ``(X, y)`` pair. Failed folds are recorded per cell; a cell failing on
    all folds is excluded from selection.
    """
    data = _as_data(data)
    if len(np.unique(data.strata)) < 2:
        raise TrainingError("model selection needs both classes present")
    folds = kfold_split(len(data), k, seed)
    everything = np.arange(len(data))
    splits = [(np.setdiff1d(everything, f), f) for f in folds]
    cells = grid.cells()
    tasks = [(ci, tr, va) for ci in range(len(cells)) for tr, va in splits]
    out = Parallel(n_jobs=n_jobs)(delayed(_fold_task)(grid, cells[ci], data, tr, va) for ci, tr, va in tasks)
    results = []
    for ci, cell in enumerate(cells):
        chunk = out[ci * k : (ci + 1) * k]
        accs = tuple(a for a, _, e in chunk if e is None)
        kbs = [kb for _, kb, e in chunk if e is None]
        errs = tuple(e for _, _, e in chunk if e is not None)
        results.append(
            CellResult(
                ci,
                cell,
                float(np.mean(accs)) if accs else math.nan,
                float(np.mean(kbs)) if kbs else math.nan,
                accs,
                errs,
            )
        )
    return GridResult(grid.family, tuple(results), select_best(results))


def _as_data(data):
    if isinstance(data, (TabularData, StreamData)):
        return data
    if isinstance(data, TimeSeries):
        return stream_segments(data)
    X, y = data
    return TabularData(X, y)


# --------------------------------------------------------------------------
# multi-split averaging


@dataclass(frozen=True)
class SplitResult:
    split: int
    seed: int
    params: dict
    mean_val_acc: float
    test_acc: float
    test_f1: float
    footprint_kb: float
    confusion: ConfusionMatrix


REPORT_COLUMNS_HEAD = ["family", "split"]
REPORT_COLUMNS_TAIL = ["mean_val_acc", "test_acc", "test_f1", "acc_std", "f1_std", "footprint_kb"]


@dataclass(frozen=True)
class EvaluationReport:
    family: str
    param_names: tuple
    splits: tuple

    @property
    def n_splits(self):
        return len(self.splits)

    def _stat(self, name, fn):
        return float(fn([getattr(s, name) for s in self.splits]))

    @property
    def acc_mean(self):
        return self._stat("test_acc", np.mean)

    @property
    def acc_std(self):
        return self._stat("test_acc", np.std)

    @property
    def f1_mean(self):
        return self._stat("test_f1", np.mean)

    @property
    def f1_std(self):
        return self._stat("test_f1", np.std)

    @property
    def footprint_kb(self):
        return self._stat("footprint_kb", np.mean)

    @property
    def columns(self):
        return REPORT_COLUMNS_HEAD + list(self.param_names) + REPORT_COLUMNS_TAIL

    def rows(self):
        """One row per split plus a ``mean`` row carrying the std columns."""
        rows = []
        for s in self.splits:
            rows.append(
                {
                    "family": self.family,
                    "split": s.split,
                    **s.params,
                    "mean_val_acc": s.mean_val_acc,
                    "test_acc": s.test_acc,
                    "test_f1": s.test_f1,
                    "acc_std": None,
                    "f1_std": None,
                    "footprint_kb": s.footprint_kb,
                }
            )
        summary = {c: None for c in self.columns}
        summary.update(
            family=self.family,
            split="mean",
            mean_val_acc=self._stat("mean_val_acc", np.mean),
            test_acc=self.acc_mean,
            test_f1=self.f1_mean,
            acc_std=self.acc_std,
            f1_std=self.f1_std,
            footprint_kb=self.footprint_kb,
        )
        for name in self.param_names:
            values = {json.dumps(s.params[name]) for s in self.splits}
            summary[name] = self.splits[0].params[name] if len(values) == 1 else None
        rows.append(summary)
        return rows

    def to_csv(self):
        return rows_to_csv(self.rows(), self.columns)

    def to_json(self):
        return json.dumps({"family": self.family, "columns": self.columns, "rows": self.rows()}, indent=2) + "\n"


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _cell(r.get(c)) for c in columns})
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def split_average(
    grid: GridSpec,
    data,
    n_splits=DEFAULT_SPLITS,
    test_ratio=DEFAULT_TEST_RATIO,
    k=DEFAULT_FOLDS,
    seed=0,
    n_jobs=1,
) -> EvaluationReport:
    """Repeat split / select / retrain / test over ``n_splits`` seeds."""
    data = _as_data(data)
    if len(np.unique(data.strata)) < 2:
        raise TrainingError("evaluation needs both classes present")
    results = []
    for s in range(n_splits):
        split_seed = seed + s
        train, test = stratified_split(data.strata, test_ratio, split_seed)
        sub = _subset(data, train)
        gr = grid_search(grid, sub, k=k, seed=split_seed, n_jobs=n_jobs)
        cm, kb, _ = _fit_score(grid, gr.best_params, data, train, test)
        m = metrics(cm)
        results.append(SplitResult(s, split_seed, gr.best_params, gr.best.mean_val_acc, m.accuracy, m.f1, kb, cm))
    return EvaluationReport(grid.family, tuple(grid.names), tuple(results))


def _subset(data, idx):
    if isinstance(data, TabularData):
        return TabularData(*data.take(idx))
    return StreamData(*data.take(idx))


__all__ = [
    "FAMILIES",
    "ConfusionMatrix",
    "Metrics",
    "metrics",
    "kfold_split",
    "stratified_split",
    "TabularData",
    "StreamData",
    "stream_segments",
    "GridSpec",
    "paper_grid",
    "quick_grid",
    "CellResult",
    "GridResult",
    "select_best",
    "grid_search",
    "SplitResult",
    "EvaluationReport",
    "rows_to_csv",
    "split_average",
]
