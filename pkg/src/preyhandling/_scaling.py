"""Train-set standardization shared by the window classifiers."""

import numpy as np
from sklearn.preprocessing import StandardScaler


def fit_scaler(X):
    """Return (mean, scale); zero-variance columns get scale 1."""
    sc = StandardScaler().fit(X)
    return sc.mean_.copy(), sc.scale_.copy()


def apply_scaler(X, mean, scale):
    if mean is None:
        return X
    return (X - mean) / scale
