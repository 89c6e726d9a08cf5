"""Leaky echo state network for per-timestep stream classification.

State update (no reservoir bias)::

    x' = (1 - a) x + a tanh(W_in u + W x)

``W_in`` is dense, uniform in ``[-input_scaling, input_scaling]``. ``W`` has
``max(n, round(connectivity * n^2))`` nonzeros at distinct random positions,
uniform in ``[-1, 1]``, rescaled to the target spectral radius. The linear
readout ``sign(w . x + b)`` is fitted by closed-form ridge regression on the
states collected after a washout.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .data import TimeSeries
from .exceptions import ModelStateError, NumericalError, TrainingError

N_INPUTS = 4
_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class EsnConfig:
    n_reservoir: int = 5
    input_scaling: float = 0.01
    leaky: float = 0.5
    connectivity: float = 0.005
    spectral_radius: float = 0.9
    ridge_beta: float = 1e-6
    washout: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.n_reservoir < 1:
            raise ValueError("n_reservoir must be >= 1")
        if not 0 < self.leaky <= 1:
            raise ValueError("leaky must be in (0, 1]")
        if not 0 < self.connectivity <= 1:
            raise ValueError("connectivity must be in (0, 1]")
        if not self.spectral_radius > 0:
            raise ValueError("spectral_radius must be > 0")
        if self.ridge_beta < 0 or self.washout < 0:
            raise ValueError("ridge_beta and washout must be >= 0")

    @property
    def nnz(self):
        n = self.n_reservoir
        return max(n, int(round(self.connectivity * n * n)))


# Shipped reservoir sizes (5, 10 and 100 units) at the selected
# scaling/leak, all with spectral radius 0.9.
DEFAULT_CONFIGS = tuple(EsnConfig(n_reservoir=n) for n in (5, 10, 100))


@dataclass(eq=False)
class EsnModel:
    config: EsnConfig
    W_in: np.ndarray  # (n, 4)
    W: np.ndarray  # (n, n), sparse in content
    w_out: np.ndarray = None  # (n,)
    b_out: float = 0.0
    trained: bool = False

    def __post_init__(self):
        if self.w_out is None:
            self.w_out = np.zeros(self.config.n_reservoir)

    @property
    def n_reservoir(self):
        return self.config.n_reservoir

    def to_dict(self):
        rows, cols = np.nonzero(self.W)
        return {
            "config": asdict(self.config),
            "W_in": self.W_in.tolist(),
            "W": [[int(r), int(c), float(self.W[r, c])] for r, c in zip(rows, cols)],
            "readout": {"w": self.w_out.tolist(), "b": float(self.b_out), "trained": self.trained},
        }

    @classmethod
    def from_dict(cls, d):
        cfg = EsnConfig(**d["config"])
        n = cfg.n_reservoir
        W = np.zeros((n, n))
        for r, c, v in d["W"]:
            W[int(r), int(c)] = v
        ro = d["readout"]
        return cls(cfg, np.asarray(d["W_in"], dtype=float), W, np.asarray(ro["w"], dtype=float), float(ro["b"]), bool(ro["trained"]))


def spectral_radius(W):
    if W.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(W))))


def init(cfg: EsnConfig) -> EsnModel:
    """Random reservoir with zeroed readout.

    Nonzero positions are redrawn (same generator, so still deterministic)
    when a draw has spectral radius 0, which happens for tiny sparse
    reservoirs without a recurrent cycle.
    """
    n = cfg.n_reservoir
    if cfg.nnz > n * n:
        raise ValueError(f"connectivity asks for {cfg.nnz} nonzeros in a {n}x{n} matrix")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    W_in = rng.uniform(-cfg.input_scaling, cfg.input_scaling, (n, N_INPUTS))
    for _ in range(_MAX_REDRAWS):
        pos = rng.choice(n * n, size=cfg.nnz, replace=False)
        W = np.zeros(n * n)
        W[pos] = rng.uniform(-1.0, 1.0, cfg.nnz)
        W = W.reshape(n, n)
        rho = spectral_radius(W)
        if rho > 1e-12:
            break
    else:
        raise NumericalError("could not draw a reservoir with non-zero spectral radius")
    W *= cfg.spectral_radius / rho
    return EsnModel(cfg, W_in, W)


def step(model: EsnModel, x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (model.n_reservoir,) or u.shape != (N_INPUTS,):
        raise ValueError(f"expected state of {model.n_reservoir} and input of {N_INPUTS} values")
    a = model.config.leaky
    return (1.0 - a) * x + a * np.tanh(model.W_in @ u + model.W @ x)


def run(model: EsnModel, U, x0=None):
    """Reservoir states for an input sequence U of shape (T, 4); returns (T, n)."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != N_INPUTS:
        raise ValueError(f"inputs must have shape (T, {N_INPUTS})")
    n = model.n_reservoir
    a = model.config.leaky
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    drive = U @ model.W_in.T
    W = model.W
    states = np.empty((len(U), n))
    for k in range(len(U)):
        x = (1.0 - a) * x + a * np.tanh(drive[k] + W @ x)
        states[k] = x
    return states


def ridge_readout(states, targets, beta):
    """Closed-form ``argmin sum((w.x + b - y)^2) + beta ||w||^2``; b unpenalised."""
    S = np.asarray(states, dtype=float)
    t = np.asarray(targets, dtype=float).reshape(-1)
    A = np.hstack([S, np.ones((len(S), 1))])
    gram = A.T @ A
    reg = np.full(A.shape[1], float(beta))
    reg[-1] = 0.0
    gram[np.diag_indices_from(gram)] += reg
    if beta == 0 and np.linalg.cond(gram) > 1e12:
        raise NumericalError("normal matrix is singular; use ridge_beta > 0")
    try:
        sol = np.linalg.solve(gram, A.T @ t)
    except np.linalg.LinAlgError:
        raise NumericalError("normal matrix is singular; use ridge_beta > 0") from None
    return sol[:-1], float(sol[-1])


def _as_streams(X, y=None):
    if isinstance(X, TimeSeries):
        return [X.values], [X.labels if y is None else np.asarray(y)]
    if isinstance(X, np.ndarray) and X.ndim == 2:
        Xs = [X]
        ys = None if y is None else [np.asarray(y)]
    else:
        Xs = [np.asarray(x, dtype=float) for x in X]
        ys = None if y is None else [np.asarray(v) for v in y]
    return Xs, ys


def fit_readout(model: EsnModel, series) -> EsnModel:
    """Train the readout on one or more streams (each run from a zero state).

    ``series`` is a TimeSeries or a list of ``(inputs, labels)`` pairs.
    Returns a new model; ``W`` and ``W_in`` are shared, never modified.
    """
    if isinstance(series, TimeSeries):
        pairs = [(series.values, series.labels)]
    else:
        pairs = list(series)
    cfg = model.config
    S, T = [], []
    for U, lab in pairs:
        if len(U) <= cfg.washout + cfg.n_reservoir:
            raise TrainingError(
                f"stream of {len(U)} steps too short for washout {cfg.washout} + {cfg.n_reservoir} units"
            )
        states = run(model, U)
        S.append(states[cfg.washout :])
        T.append(np.asarray(lab, dtype=float)[cfg.washout :])
    w, b = ridge_readout(np.vstack(S), np.concatenate(T), cfg.ridge_beta)
    return replace(model, w_out=w, b_out=b, trained=True)


def classify_stream(model: EsnModel, series):
    """One label per timestep; state threads through the whole stream."""
    if not model.trained:
        raise ModelStateError("ESN readout has not been trained")
    U = series.values if isinstance(series, TimeSeries) else series
    s = run(model, U) @ model.w_out + model.b_out
    return np.where(s >= 0, 1, -1)


class ESNClassifier(ClassifierMixin, BaseEstimator):
    """Per-timestep classifier over streams.

    ``fit``/``predict``/``score`` take either one stream (array of shape
    (T, 4) with labels of shape (T,)) or a list of streams with a matching
    list of label arrays. ``predict`` returns per-timestep labels in the
    same structure; ``score`` is accuracy over all timesteps.
    """

    def __init__(
        self,
        n_reservoir=5,
        input_scaling=0.01,
        leaky=0.5,
        connectivity=0.005,
        spectral_radius=0.9,
        ridge_beta=1e-6,
        washout=25,
        random_state=0,
    ):
        self.n_reservoir = n_reservoir
        self.input_scaling = input_scaling
        self.leaky = leaky
        self.connectivity = connectivity
        self.spectral_radius = spectral_radius
        self.ridge_beta = ridge_beta
        self.washout = washout
        self.random_state = random_state

    def _config(self):
        return EsnConfig(
            n_reservoir=int(self.n_reservoir),
            input_scaling=float(self.input_scaling),
            leaky=float(self.leaky),
            connectivity=float(self.connectivity),
            spectral_radius=float(self.spectral_radius),
            ridge_beta=float(self.ridge_beta),
            washout=int(self.washout),
            seed=int(self.random_state),
        )

    def fit(self, X, y=None):
        Xs, ys = _as_streams(X, y)
        if ys is None:
            raise ValueError("labels required")
        labels = np.concatenate([np.asarray(v).reshape(-1) for v in ys])
        if len(np.unique(labels)) < 2:
            raise TrainingError("ESN readout training needs both classes present")
        self.classes_ = np.array([-1, 1])
        self.n_features_in_ = N_INPUTS
        self.model_ = fit_readout(init(self._config()), list(zip(Xs, ys)))
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        if isinstance(X, TimeSeries):
            return classify_stream(self.model_, X)
        if isinstance(X, np.ndarray) and X.ndim == 2:
            return classify_stream(self.model_, X)
        return [classify_stream(self.model_, np.asarray(x, dtype=float)) for x in X]

    def score(self, X, y, sample_weight=None):
        pred = self.predict(X)
        if isinstance(pred, list):
            pred = np.concatenate(pred)
            y = np.concatenate([np.asarray(v).reshape(-1) for v in y])
        return float(np.mean(pred == np.asarray(y).reshape(-1)))

    def to_dict(self):
        check_is_fitted(self, "model_")
        return {
            "kind": "esn",
            "dims": {"n_in": N_INPUTS, "n_reservoir": self.model_.n_reservoir},
            "config": self.get_params(),
            "seed": int(self.random_state),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.model_ = EsnModel.from_dict(d["model"])
        est.classes_ = np.array([-1, 1])
        est.n_features_in_ = N_INPUTS
        return est


__all__ = [
    "EsnConfig",
    "EsnModel",
    "ESNClassifier",
    "DEFAULT_CONFIGS",
    "init",
    "step",
    "run",
    "spectral_radius",
    "ridge_readout",
    "fit_readout",
    "classify_stream",
]
