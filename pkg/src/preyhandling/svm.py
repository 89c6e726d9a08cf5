"""Soft-margin binary SVM trained with sequential minimal optimization.

Kernels::

    linear  k(x, y) = x . y
    rbf     k(x, y) = exp(-||x - y||^2 / (2 sigma^2))     (sigma, not gamma)
    poly3   k(x, y) = (x . y + c)^3                       (c defaults to 1)

The trainer works on the dual in minimisation form,
``min 1/2 a'Qa - sum(a)`` with ``Q_ij = y_i y_j k(x_i, x_j)``,
``0 <= a_i <= C`` and ``sum(a_i y_i) = 0``. Each iteration updates one pair
analytically. The first member of the pair is the maximal KKT violator; the
second is chosen among the opposite violators by the largest guaranteed
decrease of the objective. The gradient ``Qa - 1`` is cached and updated
after every pair step (the "error cache": ``E_i = y_i G_i + b``).
Training stops once the maximal violating pair is closer than ``tol``,
which bounds every KKT residual ``|y f(x) - 1|`` of free vectors by ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._scaling import apply_scaler, fit_scaler
from .exceptions import ConvergenceError, TrainingError

KERNELS = ("linear", "rbf", "poly3")
ALPHA_EPS = 1e-8
TAU = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    sigma: float = 1.0
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def to_dict(self):
        return {"kind": self.kind, "sigma": self.sigma, "coef0": self.coef0}


def kernel_matrix(spec: KernelSpec, A, B):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    dot = A @ B.T
    if spec.kind == "linear":
        return dot
    if spec.kind == "poly3":
        return (dot + spec.coef0) ** 3
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * dot
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * spec.sigma**2))


def kernel(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if spec.kind == "rbf":
        d = x - y
        return float(np.exp(-(d @ d) / (2.0 * spec.sigma**2)))
    return float(kernel_matrix(spec, x, y)[0, 0])


@dataclass(eq=False)
class SvmModel:
    support_vectors: np.ndarray  # (n_sv, dim)
    targets: np.ndarray  # (n_sv,) in {-1, +1}
    alphas: np.ndarray  # (n_sv,) in (0, C]
    bias: float
    kernel: KernelSpec
    C: float
    iterations: int = 0

    @property
    def n_support(self):
        return len(self.alphas)

    @property
    def dim(self):
        return self.support_vectors.shape[1]

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "support_vectors": self.support_vectors.tolist(),
            "alpha": self.alphas.tolist(),
            "y": self.targets.astype(int).tolist(),
            "b": self.bias,
        }

    @classmethod
    def from_dict(cls, d):
        sv = np.asarray(d["support_vectors"], dtype=float)
        return cls(
            sv.reshape(len(d["alpha"]), -1),
            np.asarray(d["y"], dtype=float),
            np.asarray(d["alpha"], dtype=float),
            float(d["b"]),
            KernelSpec(**d["kernel"]),
            float(d["C"]),
        )


def decide(model: SvmModel, X):
    """Decision score ``sum(a_i y_i k(x_i, x)) + b``; scalar for a single input."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.dim:
        raise ValueError(f"input has {X2.shape[1]} values, model expects {model.dim}")
    if model.n_support == 0:
        s = np.full(len(X2), model.bias)
    else:
        s = kernel_matrix(model.kernel, X2, model.support_vectors) @ (model.alphas * model.targets) + model.bias
    return float(s[0]) if single else s


def predict_labels(model: SvmModel, X):
    return np.where(np.atleast_1d(decide(model, np.atleast_2d(X))) >= 0, 1, -1)


def dual_objective(alpha, y, K):
    """Dual objective in maximisation form: sum(a) - 1/2 a'Qa."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _snap(a, C):
    snap = 1e-12 * C
    return np.where(a < snap, 0.0, np.where(a > C - snap, C, a))


def _refine_free(K, y, C, alpha):
    """One exact step on the free variables with the bounded ones held fixed.

    Within ``{d : y_F . d = 0}`` the objective is a quadratic; on its curved
    part a Newton step is taken, and along flat directions (singular Q_FF,
    e.g. a linear kernel with more free vectors than dimensions) the
    objective is linear, so it is followed to the box boundary. Pairwise
    updates only crawl along such rays. Returns the new alpha or None if no
    improving step exists.
    """
    F = np.flatnonzero((alpha > 0) & (alpha < C))
    if len(F) < 2:
        return None
    yF = y[F]
    Q = (yF[:, None] * yF[None, :]) * K[np.ix_(F, F)]
    g = (y[F] * (K[F] @ (alpha * y))) - 1.0
    # orthonormal basis of the complement of y_F
    Z = np.linalg.svd(yF[:, None], full_matrices=True)[0][:, 1:]
    w, V = np.linalg.eigh(Z.T @ Q @ Z)
    r = V.T @ (Z.T @ g)
    flat = w <= 1e-10 * max(w.max(initial=0.0), 1.0)
    ray = Z @ (V[:, flat] @ -r[flat])
    if np.linalg.norm(ray) > 1e-12 * max(np.linalg.norm(g), 1.0):
        d, t_cap = ray, np.inf
    else:
        d, t_cap = Z @ (V[:, ~flat] @ (-r[~flat] / w[~flat])), 1.0
    aF = alpha[F]
    with np.errstate(divide="ignore", invalid="ignore"):
        limits = np.where(d > 0, (C - aF) / d, np.where(d < 0, -aF / d, np.inf))
    t = min(t_cap, float(limits.min()))
    if not np.isfinite(t) or t <= 0:
        return None
    new = alpha.copy()
    new[F] = _snap(np.clip(aF + t * d, 0.0, C), C)
    ay_old, ay_new = alpha * y, new * y
    before = 0.5 * ay_old @ K @ ay_old - alpha.sum()
    after = 0.5 * ay_new @ K @ ay_new - new.sum()
    if not after < before - 1e-12 * max(abs(before), 1.0):
        return None
    return new


def _min_hinge_sum(c, y):
    """``min over b of sum(max(0, c_i - y_i b))``, exactly (convex, piecewise linear)."""
    cp, cn = np.sort(c[y > 0]), np.sort(c[y < 0])
    kinks = np.concatenate([cp, -cn])
    # suffix sums give, for each kink b, the active terms on each side
    sp = np.concatenate([np.cumsum(cp[::-1])[::-1], [0.0]])
    sn = np.concatenate([np.cumsum(cn[::-1])[::-1], [0.0]])
    kp = np.searchsorted(cp, kinks, side="right")
    kn = np.searchsorted(cn, -kinks, side="right")
    vals = (sp[kp] - (len(cp) - kp) * kinks) + (sn[kn] + (len(cn) - kn) * kinks)
    return float(vals.min()) if len(vals) else 0.0


def _gap(alpha, y, s, C):
    ww = float((alpha * y) @ s)
    primal = 0.5 * ww + C * _min_hinge_sum(1.0 - y * s, y)
    return primal - (float(alpha.sum()) - 0.5 * ww)


def duality_gap(alpha, y, K, C):
    """Primal (with the best bias) minus dual objective; bounds the dual's distance to optimal."""
    return _gap(alpha, np.asarray(y, dtype=float), K @ (alpha * y), C)


def smo_solve(K, y, C, tol=1e-3, max_passes=10_000, max_refinements=1000):
    """Solve the dual for a precomputed kernel matrix.

    Stops when the maximal violating pair is within ``tol`` and the duality
    gap is at most ``tol``. When the pair criterion holds but the gap does
    not, an exact free-set step (:func:`_refine_free`) is tried, and failing
    that the pair criterion is tightened tenfold. Returns
    ``(alpha, b, iterations)``. Raises :class:`ConvergenceError` after
    ``max_passes * n`` pair updates.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of the minimisation objective
    diag = np.diag(K).copy()
    max_iter = max_passes * max(n, 1)
    pos = y > 0

    it = 0
    refinements = 0
    last_refine = -n
    pair_tol = tol
    while True:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        score = -y * G
        m_up = np.where(up, score, -np.inf)
        i = int(np.argmax(m_up))
        m = m_up[i]
        m_low = np.where(low, score, np.inf)
        M = m_low.min()
        if m - M < tol:
            # s = K (alpha y) is recoverable from G, so the gap costs O(n log n)
            if _gap(alpha, y, y * (G + 1.0), C) <= tol:
                break
            new = None
            if refinements < max_refinements and it - last_refine >= n:
                new = _refine_free(K, y, C, alpha)
                last_refine = it
            if new is not None:
                refinements += 1
                alpha = new
                G = y * (K @ (alpha * y)) - 1.0
                continue
            if m - M < pair_tol:
                if pair_tol <= tol * 1e-6:
                    break
                pair_tol /= 10.0
                continue
            if it >= max_iter:
                break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not converge after {it} iterations (gap {m - M:.3g})", iterations=it)

        # second choice: largest guaranteed decrease among opposite violators
        cand = low & (score < m)
        b_it = m - score
        a_it = diag[i] + diag - 2.0 * K[i]
        a_it = np.where(a_it > 0, a_it, TAU)
        gain = np.where(cand, b_it**2 / a_it, -np.inf)
        j = int(np.argmax(gain))

        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
        if yi != yj:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        # E_i - E_j = y_i G_i - y_j G_j
        aj_new = aj + yj * (yi * G[i] - yj * G[j]) / eta
        aj_new = min(max(aj_new, L), H)
        ai_new = ai + yi * yj * (aj - aj_new)
        # snap round-off residue onto the box, else a 1e-17 alpha stays "free"
        snap = 1e-12 * C
        ai_new = 0.0 if ai_new < snap else C if ai_new > C - snap else ai_new
        aj_new = 0.0 if aj_new < snap else C if aj_new > C - snap else aj_new
        di, dj = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        G += y * (K[:, i] * (yi * di) + K[:, j] * (yj * dj))
        it += 1

    free = (alpha > 0) & (alpha < C)
    score = -y * G
    if np.any(free):
        b = float(np.mean(score[free]))
    else:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        hi = score[up].max() if np.any(up) else score[low].min()
        lo = score[low].min() if np.any(low) else hi
        b = 0.5 * (hi + lo)
    return alpha, b, it


def train_smo(X, y, k: KernelSpec = KernelSpec(), C=1.0, tol=1e-3, max_passes=10_000) -> SvmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) != len(X):
        raise ValueError("one target per input required")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("targets must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise TrainingError("SVM training needs both classes present")
    if not C > 0:
        raise ValueError("C must be > 0")
    K = kernel_matrix(k, X, X)
    alpha, b, it = smo_solve(K, y, C, tol=tol, max_passes=max_passes)
    keep = alpha > ALPHA_EPS
    return SvmModel(X[keep].copy(), y[keep].copy(), alpha[keep].copy(), float(b), k, float(C), it)


class SVMClassifier(ClassifierMixin, BaseEstimator):
    """Binary soft-margin SVM (labels -1/+1).

    Parameters
    ----------
    kernel : {"linear", "rbf", "poly3"}, default="rbf"
    C : float, default=1.0
    sigma : float, default=1.0
        RBF width.
    coef0 : float, default=1.0
        Constant of the cubic kernel.
    tol : float, default=1e-3
        KKT tolerance.
    max_passes : int, default=10000
    standardize : bool, default=False
    """

    def __init__(self, kernel="rbf", C=1.0, sigma=1.0, coef0=1.0, tol=1e-3, max_passes=10_000, standardize=False):
        self.kernel = kernel
        self.C = C
        self.sigma = sigma
        self.coef0 = coef0
        self.tol = tol
        self.max_passes = max_passes
        self.standardize = standardize

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.array([-1, 1])
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            self.scaler_mean_, self.scaler_scale_ = fit_scaler(X)
        else:
            self.scaler_mean_ = self.scaler_scale_ = None
        spec = KernelSpec(self.kernel, float(self.sigma), float(self.coef0))
        Xs = apply_scaler(X, self.scaler_mean_, self.scaler_scale_)
        self.model_ = train_smo(Xs, y, spec, float(self.C), tol=self.tol, max_passes=self.max_passes)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return decide(self.model_, apply_scaler(X, self.scaler_mean_, self.scaler_scale_))

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)

    @property
    def n_support_(self):
        check_is_fitted(self, "model_")
        return self.model_.n_support

    def to_dict(self):
        check_is_fitted(self, "model_")
        return {
            "kind": "svm",
            "dims": {"n_in": int(self.n_features_in_), "n_support": self.model_.n_support},
            "config": self.get_params(),
            "model": self.model_.to_dict(),
            "standardization": None
            if self.scaler_mean_ is None
            else {"mean": self.scaler_mean_.tolist(), "scale": self.scaler_scale_.tolist()},
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["config"])
        est.model_ = SvmModel.from_dict(d["model"])
        est.n_features_in_ = d["dims"]["n_in"]
        est.classes_ = np.array([-1, 1])
        std = d.get("standardization")
        est.scaler_mean_ = None if std is None else np.asarray(std["mean"])
        est.scaler_scale_ = None if std is None else np.asarray(std["scale"])
        return est


__all__ = [
    "KERNELS",
    "KernelSpec",
    "SvmModel",
    "SVMClassifier",
    "kernel",
    "kernel_matrix",
    "decide",
    "predict_labels",
    "dual_objective",
    "duality_gap",
    "smo_solve",
    "train_smo",
]
