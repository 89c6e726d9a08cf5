"""Fixed-length overlapping windows over a labelled stream.

Windows are flattened channel-major: all heave samples, then surge, sway and
depth. With 25 Hz input a 1 s window carries 100 values and a 0.4 s window 40.
The overlap in samples is ``floor(round(overlap_seconds * rate))``, so the
1 s / 0.5 s configuration overlaps by 12 samples (hop 13).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .data import TimeSeries
from .exceptions import BalanceError, ConfigurationError, ParseError

N_CHANNELS = 4


@dataclass(frozen=True)
class WindowConfig:
    window_seconds: float = 1.0
    overlap_seconds: float = 0.5
    rate: float = 25.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigurationError("rate must be > 0")
        if not 0 <= self.overlap_seconds < self.window_seconds:
            raise ConfigurationError("need 0 <= overlap_seconds < window_seconds")
        if self.window_samples < 1:
            raise ConfigurationError("window shorter than one sample")
        if self.overlap_samples >= self.window_samples:
            raise ConfigurationError("overlap covers the whole window")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_seconds * self.rate))

    @property
    def overlap_samples(self) -> int:
        # round() first absorbs float noise such as 0.2 * 25 = 5.000000000000001
        return int(math.floor(round(self.overlap_seconds * self.rate, 9)))

    @property
    def hop(self) -> int:
        return self.window_samples - self.overlap_samples

    @property
    def width(self) -> int:
        return N_CHANNELS * self.window_samples


class Window(NamedTuple):
    values: np.ndarray
    label: int


class Windows(Sequence):
    """A batch of windows backed by a 2-D array (one row per window)."""

    def __init__(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int).reshape(-1)
        if X.ndim != 2 or X.shape[0] != len(y):
            raise ValueError("X must be 2-D with one row per label")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        self.X = X
        self.y = y

    def __len__(self):
        return len(self.y)

    def __getitem__(self, i):
        if isinstance(i, slice) or not np.isscalar(i):
            return Windows(self.X[i], self.y[i])
        return Window(self.X[i], int(self.y[i]))

    def __eq__(self, other):
        if not isinstance(other, Windows):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    @property
    def width(self):
        return self.X.shape[1]

    def class_counts(self):
        return {-1: int(np.sum(self.y == -1)), 1: int(np.sum(self.y == 1))}


def window_count(n, window_samples, hop):
    if n < window_samples:
        return 0
    return (n - window_samples) // hop + 1


def label_window(step_labels) -> int:
    """Majority label of a window; an exact tie goes to +1."""
    labels = np.asarray(step_labels).reshape(-1)
    if len(labels) == 0:
        raise ValueError("cannot label an empty window")
    return 1 if labels.sum() >= 0 else -1


def segment(series: TimeSeries, cfg: WindowConfig) -> Windows:
    """Cut ``series`` into complete windows starting at 0, hop, 2*hop, ..."""
    if not math.isclose(series.rate, cfg.rate, rel_tol=1e-6):
        raise ConfigurationError(f"series rate {series.rate} Hz != window config rate {cfg.rate} Hz")
    w, hop = cfg.window_samples, cfg.hop
    count = window_count(len(series), w, hop)
    if count == 0:
        return Windows(np.empty((0, N_CHANNELS * w)), np.empty(0, dtype=int))
    starts = np.arange(count) * hop
    idx = starts[:, None] + np.arange(w)[None, :]
    # (count, w, 4) -> (count, 4, w) -> channel-major rows
    X = series.values[idx].transpose(0, 2, 1).reshape(count, N_CHANNELS * w)
    sums = series.labels[idx].astype(int).sum(axis=1)
    y = np.where(sums >= 0, 1, -1)
    return Windows(X, y)


def balance(windows: Windows, seed: int) -> Windows:
    """Undersample the majority class to the minority count, then shuffle."""
    y = windows.y
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == -1)
    if len(pos) == 0 or len(neg) == 0:
        raise BalanceError("balancing needs both classes present")
    rng = np.random.Generator(np.random.PCG64(seed))
    m = min(len(pos), len(neg))
    keep = np.concatenate([rng.choice(pos, m, replace=False), rng.choice(neg, m, replace=False)])
    keep = rng.permutation(np.sort(keep))
    return Windows(windows.X[keep], y[keep])


def split_channels(values, n_channels=N_CHANNELS):
    """Inverse of the channel-major flattening: (..., 4*w) -> (..., 4, w)."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] % n_channels:
        raise ValueError(f"window length {values.shape[-1]} not divisible by {n_channels}")
    return values.reshape(values.shape[:-1] + (n_channels, values.shape[-1] // n_channels))


# --------------------------------------------------------------------------
# CSV persistence: label,v1,...,vN  (features use the f-prefix)


def _fmt(x):
    return f"{x:.17g}"


def write_table(windows: Windows, out, prefix="v"):
    cols = ",".join(f"{prefix}{i + 1}" for i in range(windows.width))
    out.write(f"label,{cols}\n")
    for row, lab in zip(windows.X, windows.y):
        out.write(f"{int(lab)}," + ",".join(map(_fmt, row)) + "\n")


def read_table(src, prefix=None) -> tuple[Windows, str]:
    """Read a ``label,<p>1,...`` table; returns the windows and column prefix."""
    if isinstance(src, str):
        src = io.StringIO(src)
    header = src.readline().strip().split(",")
    if len(header) < 2 or header[0] != "label":
        raise ParseError("header must start with 'label'", line=1)
    found = header[1].rstrip("0123456789")
    if prefix is not None and found != prefix:
        raise ParseError(f"expected columns named {prefix}1.., got {header[1]!r}", line=1)
    expected = [f"{found}{i + 1}" for i in range(len(header) - 1)]
    if header[1:] != expected:
        raise ParseError("columns must be numbered consecutively from 1", line=1)
    width = len(header) - 1
    X, y = [], []
    for lineno, raw in enumerate(src, start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != width + 1:
            raise ParseError(f"expected {width + 1} fields, got {len(fields)}", line=lineno)
        if fields[0] not in ("-1", "1", "+1"):
            raise ParseError(f"label must be -1 or 1, got {fields[0]!r}", line=lineno)
        try:
            X.append([float(f) for f in fields[1:]])
        except ValueError:
            raise ParseError("non-numeric value", line=lineno) from None
        y.append(int(fields[0]))
    X = np.array(X, dtype=float).reshape(len(y), width)
    return Windows(X, np.array(y, dtype=int)), found


def write_windows(windows: Windows, path):
    with open(path, "w", newline="") as fh:
        write_table(windows, fh, prefix="v")


def read_windows(path) -> Windows:
    with open(path, newline="") as fh:
        return read_table(fh, prefix="v")[0]


__all__ = [
    "WindowConfig",
    "Window",
    "Windows",
    "window_count",
    "label_window",
    "segment",
    "balance",
    "split_channels",
    "write_table",
    "read_table",
    "write_windows",
    "read_windows",
]
