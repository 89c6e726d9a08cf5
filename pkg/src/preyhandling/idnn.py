"""Input-delay neural network: one hidden layer over a delayed-input window.

Hidden units are either ``tanh(w_j . x + b_j)`` ("sigmoid") or Gaussian
``exp(-||x - c_j||^2 / (2 sigma_j^2))`` ("rbf"). The output unit is
``tanh(v . h + c)`` and the predicted class is the sign of that score, with
0 mapped to +1.

Training minimises ``mean((score - target)^2) + weight_decay * ||w||^2``
where the penalty covers the connection weights: the input-to-hidden matrix
for sigmoid units and the hidden-to-output vector for both kinds. RBF centres
and widths are not penalised.

Two full-batch trainers are provided: Rprop (default) and plain gradient
descent with momentum. Rprop takes ``eta`` as its initial step size and
ignores ``momentum``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._scaling import apply_scaler, fit_scaler
from .exceptions import TrainingError

HIDDEN_KINDS = ("sigmoid", "rbf")

RPROP_INCREASE = 1.2
RPROP_DECREASE = 0.5
RPROP_STEP_MIN = 1e-6
RPROP_STEP_MAX = 50.0
INIT_RANGE = 0.1
MIN_WIDTH = 1e-6

_KEYS = {"sigmoid": ("W", "b", "v", "c"), "rbf": ("centers", "widths", "v", "c")}
_PENALISED = {"sigmoid": ("W", "v"), "rbf": ("v",)}


@dataclass(frozen=True)
class IdnnConfig:
    n_in: int
    n_hidden: int = 5
    hidden_kind: str = "sigmoid"
    eta: float = 0.1
    momentum: float = 0.0
    weight_decay: float = 0.0
    epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_in < 1 or self.n_hidden < 1:
            raise ValueError("n_in and n_hidden must be >= 1")
        if self.hidden_kind not in HIDDEN_KINDS:
            raise ValueError(f"hidden_kind must be one of {HIDDEN_KINDS}")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.momentum < 0 or self.weight_decay < 0:
            raise ValueError("momentum and weight_decay must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass(eq=False)
class IdnnModel:
    """Trained parameters.

    ``params`` holds, for sigmoid units, ``W`` (n_in, n_hidden), ``b``
    (n_hidden,); for rbf units ``centers`` (n_hidden, n_in) and ``widths``
    (n_hidden,). Both kinds have output weights ``v`` (n_hidden,) and output
    bias ``c`` (shape (1,)).
    """

    hidden_kind: str
    params: dict = field(default_factory=dict)

    @property
    def n_hidden(self):
        return len(self.params["v"])

    @property
    def n_in(self):
        if self.hidden_kind == "sigmoid":
            return self.params["W"].shape[0]
        return self.params["centers"].shape[1]

    def copy(self):
        return IdnnModel(self.hidden_kind, {k: v.copy() for k, v in self.params.items()})

    # flat parameter vector, used by the trainers and the gradient check
    def flat(self):
        return np.concatenate([self.params[k].ravel() for k in _KEYS[self.hidden_kind]])

    def with_flat(self, theta):
        out, pos = {}, 0
        for k in _KEYS[self.hidden_kind]:
            shape = self.params[k].shape
            size = int(np.prod(shape))
            out[k] = np.asarray(theta[pos : pos + size], dtype=float).reshape(shape).copy()
            pos += size
        return IdnnModel(self.hidden_kind, out)

    def to_dict(self):
        return {"hidden_kind": self.hidden_kind, "params": {k: v.tolist() for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["hidden_kind"], {k: np.asarray(v, dtype=float) for k, v in d["params"].items()})


def _check_dim(model, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.n_in:
        raise ValueError(f"input has {X.shape[-1]} values, model expects {model.n_in}")
    return X


def _sq_dist(X, C):
    d = (X * X).sum(1)[:, None] + (C * C).sum(1)[None, :] - 2.0 * X @ C.T
    return np.maximum(d, 0.0)


def hidden(model: IdnnModel, X):
    """Hidden-layer activations, shape (n, n_hidden)."""
    X = np.atleast_2d(_check_dim(model, X))
    p = model.params
    if model.hidden_kind == "sigmoid":
        return np.tanh(X @ p["W"] + p["b"])
    return np.exp(-_sq_dist(X, p["centers"]) / (2.0 * p["widths"] ** 2))


def forward(model: IdnnModel, X):
    """Score in (-1, 1) for one input vector or a batch."""
    X = _check_dim(model, X)
    s = np.tanh(hidden(model, X) @ model.params["v"] + model.params["c"][0])
    return float(s[0]) if X.ndim == 1 else s


def predict_labels(model: IdnnModel, X):
    return np.where(np.asarray(forward(model, np.atleast_2d(X))) >= 0, 1, -1)


def _penalty(model, weight_decay):
    return weight_decay * sum(float(np.sum(model.params[k] ** 2)) for k in _PENALISED[model.hidden_kind])


def loss(model: IdnnModel, X, targets, weight_decay=0.0):
    s = forward(model, np.atleast_2d(X))
    return float(np.mean((s - targets) ** 2)) + _penalty(model, weight_decay)


def loss_and_gradient(model: IdnnModel, X, targets, weight_decay=0.0):
    """Regularised MSE and its exact gradient (dict keyed like ``params``)."""
    X = np.atleast_2d(_check_dim(model, X))
    t = np.asarray(targets, dtype=float).reshape(-1)
    if len(X) == 0 or len(t) != len(X):
        raise ValueError("need a non-empty batch with one target per input")
    p = model.params
    n = len(X)
    h = hidden(model, X)
    s = np.tanh(h @ p["v"] + p["c"][0])
    err = s - t
    value = float(np.mean(err**2)) + _penalty(model, weight_decay)

    dz = (2.0 / n) * err * (1.0 - s**2)  # d/d(output pre-activation)
    g = {"v": h.T @ dz + 2.0 * weight_decay * p["v"], "c": np.array([dz.sum()])}
    dh = np.outer(dz, p["v"])
    if model.hidden_kind == "sigmoid":
        da = dh * (1.0 - h**2)
        g["W"] = X.T @ da + 2.0 * weight_decay * p["W"]
        g["b"] = da.sum(axis=0)
    else:
        C, sig = p["centers"], p["widths"]
        q = dh * h  # dL/dh * h
        # d h_ij / d c_j = h_ij (x_i - c_j) / sigma_j^2
        g["centers"] = (q.T @ X - q.sum(axis=0)[:, None] * C) / (sig**2)[:, None]
        # d h_ij / d sigma_j = h_ij ||x_i - c_j||^2 / sigma_j^3
        g["widths"] = (q * _sq_dist(X, C)).sum(axis=0) / sig**3
    return value, g


def gradient(model: IdnnModel, X, targets, weight_decay=0.0):
    return loss_and_gradient(model, X, targets, weight_decay)[1]


def init_model(cfg: IdnnConfig, X, rng=None) -> IdnnModel:
    """Uniform [-0.1, 0.1] weights; rbf centres are distinct training rows."""
    rng = rng if rng is not None else np.random.Generator(np.random.PCG64(cfg.seed))
    H, d = cfg.n_hidden, cfg.n_in
    v = rng.uniform(-INIT_RANGE, INIT_RANGE, H)
    c = rng.uniform(-INIT_RANGE, INIT_RANGE, 1)
    if cfg.hidden_kind == "sigmoid":
        W = rng.uniform(-INIT_RANGE, INIT_RANGE, (d, H))
        b = rng.uniform(-INIT_RANGE, INIT_RANGE, H)
        return IdnnModel("sigmoid", {"W": W, "b": b, "v": v, "c": c})

    X = np.asarray(X, dtype=float)
    uniq = np.unique(X, axis=0)
    pick = rng.choice(len(uniq), size=H, replace=H > len(uniq))
    centers = uniq[pick].copy()
    if H > 1:
        dist = np.sqrt(_sq_dist(centers, centers)[np.triu_indices(H, 1)])
        width = float(np.median(dist))
    else:
        width = 0.0
    if not width > 0:
        width = 1.0
    return IdnnModel("rbf", {"centers": centers, "widths": np.full(H, width), "v": v, "c": c})


def _check_training_data(X, y):
    y = np.asarray(y)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise TrainingError("IDNN training needs at least two examples from both classes")


def _project(model):
    if model.hidden_kind == "rbf":
        np.maximum(model.params["widths"], MIN_WIDTH, out=model.params["widths"])
    return model


def train_rprop(cfg: IdnnConfig, X, y, model=None):
    """Full-batch Rprop- training.

    Returns ``(model, trace)`` where ``trace[k]`` is the best training loss
    seen after ``k`` updates (``trace[0]`` is the initial loss). The returned
    model is the best parameter set visited, so ``trace[-1] <= trace[0]``.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(y, dtype=float)
    _check_training_data(X, t)
    model = init_model(cfg, X) if model is None else model.copy()

    step = None
    prev_g = None
    best_loss, best = np.inf, model
    trace = []
    for epoch in range(cfg.epochs + 1):
        value, g = loss_and_gradient(model, X, t, cfg.weight_decay)
        if value < best_loss:
            best_loss, best = value, model
        trace.append(best_loss)
        if epoch == cfg.epochs:
            break
        grad = np.concatenate([g[k].ravel() for k in _KEYS[model.hidden_kind]])
        if step is None:
            step = np.full_like(grad, cfg.eta)
            prev_g = np.zeros_like(grad)
        agree = grad * prev_g
        step = np.where(agree > 0, np.minimum(step * RPROP_INCREASE, RPROP_STEP_MAX), step)
        step = np.where(agree < 0, np.maximum(step * RPROP_DECREASE, RPROP_STEP_MIN), step)
        model = _project(model.with_flat(model.flat() - np.sign(grad) * step))
        prev_g = grad
    return best, np.array(trace)


def train_gd(cfg: IdnnConfig, X, y, model=None):
    """Full-batch gradient descent with learning rate ``eta`` and ``momentum``.

    Same return convention as :func:`train_rprop`.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(y, dtype=float)
    _check_training_data(X, t)
    model = init_model(cfg, X) if model is None else model.copy()
    velocity = np.zeros_like(model.flat())
    best_loss, best = np.inf, model
    trace = []
    for epoch in range(cfg.epochs + 1):
        value, g = loss_and_gradient(model, X, t, cfg.weight_decay)
        if not np.isfinite(value):
            break
        if value < best_loss:
            best_loss, best = value, model
        trace.append(best_loss)
        if epoch == cfg.epochs:
            break
        grad = np.concatenate([g[k].ravel() for k in _KEYS[model.hidden_kind]])
        velocity = cfg.momentum * velocity - cfg.eta * grad
        model = _project(model.with_flat(model.flat() + velocity))
    return best, np.array(trace)


class IDNNClassifier(ClassifierMixin, BaseEstimator):
    """Single-hidden-layer network for +/-1 window classification.

    Parameters
    ----------
    n_hidden : int, default=5
    hidden_kind : {"sigmoid", "rbf"}, default="sigmoid"
    eta : float, default=0.1
        Initial Rprop step (or learning rate for ``solver="gd"``).
    momentum : float, default=0.0
        Only used by ``solver="gd"``.
    weight_decay : float, default=0.0
    epochs : int, default=1000
    solver : {"rprop", "gd"}, default="rprop"
    standardize : bool, default=False
        Standardize inputs with train-set mean/std before training.
    random_state : int, default=0

    Attributes
    ----------
    model_ : IdnnModel
    loss_curve_ : ndarray
        Best-so-far training loss per epoch.
    """

    def __init__(
        self,
        n_hidden=5,
        hidden_kind="sigmoid",
        eta=0.1,
        momentum=0.0,
        weight_decay=0.0,
        epochs=1000,
        solver="rprop",
        standardize=False,
        random_state=0,
    ):
        self.n_hidden = n_hidden
        self.hidden_kind = hidden_kind
        self.eta = eta
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.solver = solver
        self.standardize = standardize
        self.random_state = random_state

    def _config(self, n_in):
        return IdnnConfig(
            n_in=n_in,
            n_hidden=int(self.n_hidden),
            hidden_kind=self.hidden_kind,
            eta=float(self.eta),
            momentum=float(self.momentum),
            weight_decay=float(self.weight_decay),
            epochs=int(self.epochs),
            seed=int(self.random_state),
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.array([-1, 1])
        if not set(np.unique(y)) <= {-1, 1}:
            raise ValueError("targets must be -1 or +1")
        cfg = self._config(X.shape[1])
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            self.scaler_mean_, self.scaler_scale_ = fit_scaler(X)
        else:
            self.scaler_mean_ = self.scaler_scale_ = None
        Xs = apply_scaler(X, self.scaler_mean_, self.scaler_scale_)
        trainer = {"rprop": train_rprop, "gd": train_gd}.get(self.solver)
        if trainer is None:
            raise ValueError(f"unknown solver {self.solver!r}")
        self.model_, self.loss_curve_ = trainer(cfg, Xs, y)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return forward(self.model_, apply_scaler(X, self.scaler_mean_, self.scaler_scale_))

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def to_dict(self):
        check_is_fitted(self, "model_")
        return {
            "kind": "idnn",
            "dims": {"n_in": int(self.n_features_in_), "n_hidden": self.model_.n_hidden, "n_out": 1},
            "hidden_kind": self.model_.hidden_kind,
            "config": self.get_params(),
            "seed": int(self.random_state),
            "model": self.model_.to_dict(),
            "standardization": None
            if self.scaler_mean_ is None
            else {"mean": self.scaler_mean_.tolist(), "scale": self.scaler_scale_.tolist()},
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.model_ = IdnnModel.from_dict(d["model"])
        est.n_features_in_ = d["dims"]["n_in"]
        est.classes_ = np.array([-1, 1])
        est.loss_curve_ = np.array([])
        std = d.get("standardization")
        est.scaler_mean_ = None if std is None else np.asarray(std["mean"])
        est.scaler_scale_ = None if std is None else np.asarray(std["scale"])
        return est


__all__ = [
    "HIDDEN_KINDS",
    "IdnnConfig",
    "IdnnModel",
    "IDNNClassifier",
    "forward",
    "hidden",
    "loss",
    "loss_and_gradient",
    "gradient",
    "init_model",
    "predict_labels",
    "train_rprop",
    "train_gd",
]
