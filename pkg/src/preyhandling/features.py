"""Statistical summary of a window: 30 values.

Layout: for each channel (heave, surge, sway, depth) in turn
``mean, std, min, max, skew, kurtosis`` (24 values), then the Pearson
correlations of the six channel pairs in the order heave-surge, heave-sway,
heave-depth, surge-sway, surge-depth, sway-depth.

Moments are population moments: ``std = sqrt(m2)``, ``skew = m3 / m2**1.5``
and excess ``kurtosis = m4 / m2**2 - 3``. A constant channel gets std, skew,
kurtosis and every correlation it takes part in set to 0.
"""

from __future__ import annotations

from itertools import combinations
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .data import CHANNELS
from .windowing import Window, Windows, read_table, split_channels, write_table

STATS = ("mean", "std", "min", "max", "skew", "kurtosis")
PAIRS = tuple(combinations(range(len(CHANNELS)), 2))
N_FEATURES = len(STATS) * len(CHANNELS) + len(PAIRS)

FEATURE_NAMES = tuple(
    [f"{c}_{s}" for c in CHANNELS for s in STATS]
    + [f"corr_{CHANNELS[i]}_{CHANNELS[j]}" for i, j in PAIRS]
)


class FeatureVector(NamedTuple):
    values: np.ndarray
    label: int


def extract_array(X) -> np.ndarray:
    """Features for a batch of flattened windows, shape (n, 4*w) -> (n, 30)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return extract_array(X[None, :])[0]
    chans = split_channels(X)  # (n, 4, w)
    if chans.shape[-1] < 2:
        raise ValueError("each channel needs at least 2 samples")
    n = chans.shape[0]

    lo = chans.min(axis=-1)
    hi = chans.max(axis=-1)
    flat = lo == hi
    mean = chans.mean(axis=-1)
    mean = np.where(flat, chans[..., 0], mean)
    dev = chans - mean[..., None]
    m2 = np.mean(dev**2, axis=-1)
    m3 = np.mean(dev**3, axis=-1)
    m4 = np.mean(dev**4, axis=-1)
    safe_m2 = np.where(flat, 1.0, m2)
    std = np.where(flat, 0.0, np.sqrt(m2))
    skew = np.where(flat, 0.0, m3 / safe_m2**1.5)
    kurt = np.where(flat, 0.0, m4 / safe_m2**2 - 3.0)

    per_channel = np.stack([mean, std, lo, hi, skew, kurt], axis=-1).reshape(n, -1)

    corr = np.empty((n, len(PAIRS)))
    for k, (i, j) in enumerate(PAIRS):
        cov = np.mean(dev[:, i] * dev[:, j], axis=-1)
        degenerate = flat[:, i] | flat[:, j]
        denom = np.sqrt(np.where(degenerate, 1.0, m2[:, i] * m2[:, j]))
        corr[:, k] = np.where(degenerate, 0.0, np.clip(cov / denom, -1.0, 1.0))
    return np.hstack([per_channel, corr])


def extract(w: Window) -> FeatureVector:
    return FeatureVector(extract_array(w.values), int(w.label))


def featurize(windows: Windows) -> Windows:
    """Feature table with the window labels carried over."""
    if len(windows) == 0:
        return Windows(np.empty((0, N_FEATURES)), windows.y)
    return Windows(extract_array(windows.X), windows.y)


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer from flattened windows to 30 features."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        return extract_array(check_array(X))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


def write_features(table: Windows, path):
    with open(path, "w", newline="") as fh:
        write_table(table, fh, prefix="f")


def read_features(path) -> Windows:
    with open(path, newline="") as fh:
        return read_table(fh, prefix="f")[0]


__all__ = [
    "STATS",
    "PAIRS",
    "N_FEATURES",
    "FEATURE_NAMES",
    "FeatureVector",
    "FeatureExtractor",
    "extract",
    "extract_array",
    "featurize",
    "write_features",
    "read_features",
]
