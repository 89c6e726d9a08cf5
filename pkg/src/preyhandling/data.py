"""Labelled sensor streams: CSV ingest/emit and a seeded synthetic generator.

A stream is four channels sampled at a fixed rate (25 Hz on the loggers the
pipeline targets): heave, surge and sway acceleration in g, plus depth in
metres. Every sample carries a label, +1 for prey handling and -1 otherwise.

The CSV layout is fixed::

    t,heave,surge,sway,depth,label
    0,0.01,-0.2,0.05,4.3,-1
    0.04,...

Archives in other layouts have to be converted to these six columns first
(time in seconds, the three body-frame axes, depth, and a -1/1 label).

Randomness in :func:`synthesize` comes from numpy's PCG64 bit generator
seeded with ``SynthConfig.seed``; the same config always yields the same
stream.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

from .exceptions import OrderingError, ParseError

CHANNELS = ("heave", "surge", "sway", "depth")
CSV_HEADER = "t,heave,surge,sway,depth,label"
DEFAULT_RATE = 25.0
SIGNIFICANT_DIGITS = 9


class SensorSample(NamedTuple):
    t: float
    heave: float
    surge: float
    sway: float
    depth: float
    label: int


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """An immutable labelled 4-channel stream.

    Parameters
    ----------
    rate : float
        Sampling rate in Hz.
    t : array of shape (n,)
        Strictly increasing timestamps in seconds.
    values : array of shape (n, 4)
        Channel values in ``CHANNELS`` order.
    labels : array of shape (n,)
        Per-sample labels in {-1, +1}.
    """

    rate: float
    t: np.ndarray
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(len(t), 4)
        labels = np.asarray(self.labels).reshape(-1)
        if len(labels) != len(t):
            raise ValueError("labels and timestamps differ in length")
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(values))):
            raise ValueError("non-finite sample value")
        if not np.all((labels == 1) | (labels == -1)):
            raise ValueError("labels must be -1 or +1")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            k = int(np.argmax(np.diff(t) <= 0)) + 1
            raise OrderingError(f"timestamp {t[k]!r} at sample {k} does not increase")
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "t", _readonly(t))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "labels", _readonly(labels.astype(np.int8)))

    @classmethod
    def from_samples(cls, samples: Iterable[SensorSample], rate=DEFAULT_RATE):
        rows = [tuple(s) for s in samples]
        if not rows:
            return cls(rate, np.empty(0), np.empty((0, 4)), np.empty(0, dtype=np.int8))
        arr = np.array([r[:5] for r in rows], dtype=float)
        return cls(rate, arr[:, 0], arr[:, 1:5], [r[5] for r in rows])

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[SensorSample]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> SensorSample:
        v = self.values[i]
        return SensorSample(float(self.t[i]), *map(float, v), int(self.labels[i]))

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.rate == other.rate
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    @property
    def duration(self):
        return len(self) / self.rate

    def channel(self, name):
        return self.values[:, CHANNELS.index(name)]

    def is_uniform(self, tol=1e-6):
        """True if every timestamp gap is within ``tol`` seconds of 1/rate."""
        if len(self) < 2:
            return True
        return bool(np.all(np.abs(np.diff(self.t) - 1.0 / self.rate) <= tol))

    def class_counts(self):
        return {-1: int(np.sum(self.labels == -1)), 1: int(np.sum(self.labels == 1))}


def infer_rate(t, default=DEFAULT_RATE):
    """Sampling rate from the median timestamp gap (robust to isolated jitter).

    Rounded to the 9 significant digits timestamps are stored with, so
    0.04 s spacing gives exactly 25 Hz.
    """
    t = np.asarray(t, dtype=float)
    if len(t) < 2:
        return default
    return float(f"{1.0 / float(np.median(np.diff(t))):.{SIGNIFICANT_DIGITS}g}")


def _as_lines(text):
    if isinstance(text, str):
        return io.StringIO(text)
    return text


def parse_csv(text: str | TextIO, rate=None) -> TimeSeries:
    """Parse a stream from CSV text or an open text file.

    ``rate`` overrides rate inference; otherwise the median timestamp gap is
    used, falling back to 25 Hz when fewer than two samples are present.
    """
    lines = _as_lines(text)
    header = lines.readline()
    if header.strip().lstrip("﻿") != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}, got {header.strip()!r}", line=1)
    rows = []
    prev_t = None
    for lineno, raw in enumerate(lines, start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise ParseError(f"expected 6 fields, got {len(fields)}", line=lineno)
        try:
            nums = [float(f) for f in fields[:5]]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line=lineno) from None
        if not all(math.isfinite(x) for x in nums):
            raise ParseError(f"non-finite field in {line!r}", line=lineno)
        label_field = fields[5].strip()
        if label_field not in ("-1", "1", "+1"):
            raise ParseError(f"label must be -1 or 1, got {label_field!r}", line=lineno)
        if prev_t is not None and nums[0] <= prev_t:
            raise OrderingError(f"line {lineno}: timestamp {nums[0]!r} does not increase")
        prev_t = nums[0]
        rows.append(nums + [int(label_field)])
    if not rows:
        return TimeSeries(rate or DEFAULT_RATE, np.empty(0), np.empty((0, 4)), np.empty(0, dtype=np.int8))
    arr = np.array(rows, dtype=float)
    if rate is None:
        rate = infer_rate(arr[:, 0])
    return TimeSeries(rate, arr[:, 0], arr[:, 1:5], arr[:, 5].astype(np.int8))


def read_csv(path, rate=None) -> TimeSeries:
    with open(path, newline="") as fh:
        return parse_csv(fh, rate=rate)


def _fmt(x):
    s = f"{x:.{SIGNIFICANT_DIGITS}g}"
    return "0" if s == "-0" else s


def emit_csv(series: TimeSeries, out: TextIO | None = None):
    """Write ``series`` as CSV with 9 significant digits per field.

    Returns the text when ``out`` is None.
    """
    buf = out if out is not None else io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for t, v, lab in zip(series.t, series.values, series.labels):
        buf.write(f"{_fmt(t)},{_fmt(v[0])},{_fmt(v[1])},{_fmt(v[2])},{_fmt(v[3])},{int(lab)}\n")
    if out is None:
        return buf.getvalue()
    return None


def write_csv(series: TimeSeries, path):
    with open(path, "w", newline="") as fh:
        emit_csv(series, fh)


def round_significant(a, digits=SIGNIFICANT_DIGITS):
    """Round every entry to what ``emit_csv`` would print."""
    a = np.asarray(a, dtype=float)
    flat = [float(f"{x:.{digits}g}") for x in a.reshape(-1)]
    return np.array(flat, dtype=float).reshape(a.shape)


# --------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic two-regime stream.

    Swimming segments (label -1) are a low-frequency stroke oscillation with
    a slow dive profile between ``swim_depth_min_m`` and ``swim_depth_max_m``.
    Prey-handling bouts (label +1) add broadband bursts on surge and sway and
    hold the animal at a depth plateau drawn from
    ``[handling_depth_min_m, handling_depth_max_m]``.
    Segment lengths are ``min + Exponential(mean - min)`` seconds.
    """

    seed: int = 0
    duration: float = 600.0
    rate: float = DEFAULT_RATE
    bout_mean_s: float = 8.0
    bout_min_s: float = 2.0
    swim_mean_s: float = 12.0
    swim_min_s: float = 3.0
    swim_freq_hz: float = 1.0
    burst_freq_hz: float = 4.0
    burst_amp_g: float = 0.6
    noise_std_g: float = 0.02
    swim_depth_min_m: float = 2.0
    swim_depth_max_m: float = 10.0
    dive_period_s: float = 40.0
    handling_depth_min_m: float = 15.0
    handling_depth_max_m: float = 30.0
    depth_noise_m: float = 0.2

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.noise_std_g < 0 or self.depth_noise_m < 0:
            raise ValueError("noise std must be >= 0")
        if not 0 <= self.bout_min_s <= self.bout_mean_s or self.bout_mean_s <= 0:
            raise ValueError("need 0 <= bout_min_s <= bout_mean_s, bout_mean_s > 0")
        if not 0 <= self.swim_min_s <= self.swim_mean_s or self.swim_mean_s <= 0:
            raise ValueError("need 0 <= swim_min_s <= swim_mean_s, swim_mean_s > 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Regime:
    start: float
    end: float
    label: int


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def bout_schedule(cfg: SynthConfig) -> list[Regime]:
    """Alternating swim/handling regimes covering ``[0, cfg.duration)``."""
    rng = _rng([cfg.seed, 0])
    regimes = []
    start = 0.0
    label = -1
    first = True
    while start < cfg.duration:
        if label == -1:
            length = cfg.swim_min_s + rng.exponential(cfg.swim_mean_s - cfg.swim_min_s or 1e-12)
            if first:
                # keeps both classes present once duration >= 2 * bout_mean_s
                length = min(length, cfg.bout_mean_s)
        else:
            length = cfg.bout_min_s + rng.exponential(cfg.bout_mean_s - cfg.bout_min_s or 1e-12)
        # at least one sample period, so every regime owns a sample
        end = min(start + max(length, 1.0 / cfg.rate), cfg.duration)
        regimes.append(Regime(start, end, label))
        start = end
        label = -label
        first = False
    return regimes


def synthesize(cfg: SynthConfig = SynthConfig()) -> TimeSeries:
    """Deterministic synthetic stream; labels follow :func:`bout_schedule` exactly."""
    n = int(math.floor(cfg.duration * cfg.rate + 1e-9))
    t = np.arange(n) / cfg.rate
    values = np.empty((n, 4))
    labels = np.empty(n, dtype=np.int8)
    if n == 0:
        return TimeSeries(cfg.rate, t, values, labels)

    rng = _rng([cfg.seed, 1])
    w_swim = 2 * np.pi * cfg.swim_freq_hz
    w_burst = 2 * np.pi * cfg.burst_freq_hz
    dive_mid = 0.5 * (cfg.swim_depth_min_m + cfg.swim_depth_max_m)
    dive_amp = 0.5 * (cfg.swim_depth_max_m - cfg.swim_depth_min_m)
    dive_phase = rng.uniform(0, 2 * np.pi)

    for reg in bout_schedule(cfg):
        idx = np.nonzero((t >= reg.start) & (t < reg.end))[0]
        if len(idx) == 0:
            continue
        labels[idx] = reg.label
        tt = t[idx]
        m = len(idx)
        phase = rng.uniform(0, 2 * np.pi, size=3)
        noise = rng.normal(0.0, cfg.noise_std_g, size=(m, 3)) if cfg.noise_std_g > 0 else np.zeros((m, 3))
        if reg.label == -1:
            heave = 0.15 * np.sin(w_swim * tt + phase[0])
            surge = 0.30 * np.sin(w_swim * tt + phase[0] + np.pi / 2)
            sway = 0.08 * np.sin(2.0 * w_swim * tt + phase[1])
            depth = dive_mid + dive_amp * np.sin(2 * np.pi * tt / cfg.dive_period_s + dive_phase)
        else:
            a = cfg.burst_amp_g
            heave = 0.05 * np.sin(w_swim * tt + phase[0])
            surge = a * (0.6 * np.sin(w_burst * tt + phase[1]) + 0.8 * rng.standard_normal(m))
            sway = a * (0.6 * np.sin(w_burst * tt + phase[2]) + 0.8 * rng.standard_normal(m))
            depth = np.full(m, rng.uniform(cfg.handling_depth_min_m, cfg.handling_depth_max_m))
        if cfg.depth_noise_m > 0:
            depth = depth + rng.normal(0.0, cfg.depth_noise_m, size=m)
        values[idx, 0] = heave + noise[:, 0]
        values[idx, 1] = surge + noise[:, 1]
        values[idx, 2] = sway + noise[:, 2]
        values[idx, 3] = np.maximum(depth, 0.0)

    return TimeSeries(cfg.rate, round_significant(t), round_significant(values), labels)


__all__ = [
    "CHANNELS",
    "CSV_HEADER",
    "SensorSample",
    "TimeSeries",
    "SynthConfig",
    "Regime",
    "bout_schedule",
    "synthesize",
    "parse_csv",
    "read_csv",
    "emit_csv",
    "write_csv",
    "infer_rate",
    "round_significant",
]
