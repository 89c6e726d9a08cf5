"""Memory footprint of trained models and storage autonomy of the logger.

Footprints count stored parameters at ``bytes_per_param`` bytes each
(8 by default) and report kilobytes as ``count * bytes / 1024``:

* IDNN: weight-matrix entries only, ``n_in * n_hidden + n_hidden * n_out``
  (biases and I/O buffers excluded). For the reference
  100-50-1 / 30-50-1 / 40-50-1 / 30-5-1 shapes this gives 39.45 / 12.11 / 16.02 /
  1.21 KB.
* SVM: ``n_sv * (dim + 1) + 1`` (vectors, coefficients, bias).
* ESN: ``nnz(W_in) + nnz(W) + n_reservoir + 1``.

Autonomy is the time until storage of ``capacity_bytes`` (8 MiB by default)
fills: raw logging at a byte rate, or on-board classification at a bit rate
(one bit per classification output).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .esn import ESNClassifier, EsnModel
from .exceptions import ModelStateError
from .idnn import IDNNClassifier, IdnnModel
from .svm import SVMClassifier, SvmModel
from .windowing import WindowConfig

DEFAULT_BYTES_PER_PARAM = 8
DEFAULT_CAPACITY_BYTES = 8 * 2**20
MODES = ("raw_logging", "classified")


@dataclass(frozen=True)
class FootprintReport:
    parameter_count: int
    bytes_per_param: int = DEFAULT_BYTES_PER_PARAM

    @property
    def bytes(self):
        return self.parameter_count * self.bytes_per_param

    @property
    def footprint_kb(self):
        return self.bytes / 1024.0


def idnn_parameter_count(n_in, n_hidden, n_out=1):
    return n_in * n_hidden + n_hidden * n_out


def svm_parameter_count(n_support, dim):
    return n_support * (dim + 1) + 1


def esn_parameter_count(nnz_in, nnz_recurrent, n_reservoir):
    return nnz_in + nnz_recurrent + n_reservoir + 1


def parameter_count(model) -> int:
    if isinstance(model, (IDNNClassifier, SVMClassifier, ESNClassifier)):
        if not hasattr(model, "model_"):
            raise ModelStateError(f"{type(model).__name__} is not fitted")
        model = model.model_
    if isinstance(model, IdnnModel):
        return idnn_parameter_count(model.n_in, model.n_hidden, 1)
    if isinstance(model, SvmModel):
        return svm_parameter_count(model.n_support, model.dim)
    if isinstance(model, EsnModel):
        if not model.trained:
            raise ModelStateError("ESN readout has not been trained")
        return esn_parameter_count(
            int(np.count_nonzero(model.W_in)), int(np.count_nonzero(model.W)), model.n_reservoir
        )
    raise TypeError(f"no footprint rule for {type(model).__name__}")


def footprint(model, bytes_per_param=DEFAULT_BYTES_PER_PARAM) -> FootprintReport:
    return FootprintReport(parameter_count(model), bytes_per_param)


# --------------------------------------------------------------------------
# storage autonomy


@dataclass(frozen=True)
class StorageScenario:
    """``rate`` is bytes/s for raw logging and bits/s for classified output."""

    mode: str
    rate: float
    capacity_bytes: int = DEFAULT_CAPACITY_BYTES
    name: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.capacity_bytes > 0:
            raise ValueError("capacity must be > 0")
        if not self.rate > 0:
            raise ValueError("rate must be > 0")

    @property
    def unit(self):
        return "B/s" if self.mode == "raw_logging" else "bit/s"


@dataclass(frozen=True)
class Autonomy:
    seconds: float

    @property
    def hours(self):
        return self.seconds / 3600.0

    @property
    def days(self):
        return self.seconds / 86400.0


def autonomy(s: StorageScenario) -> Autonomy:
    if s.mode == "raw_logging":
        return Autonomy(s.capacity_bytes / s.rate)
    return Autonomy(s.capacity_bytes * 8 / s.rate)


def raw_logging_rate(sample_rate=25.0, channels=4, bytes_per_value=4):
    """Bytes per second written when every sample of every channel is kept."""
    return sample_rate * channels * bytes_per_value


def classification_rate(mode) -> float:
    """Outputs per second.

    ``mode`` is a WindowConfig (one output per nominal hop,
    ``window_seconds - overlap_seconds``, before any rounding to samples) or
    a number, read as the sample rate of per-timestep stream classification.
    """
    if isinstance(mode, WindowConfig):
        return 1.0 / (mode.window_seconds - mode.overlap_seconds)
    if isinstance(mode, Real):
        if not mode > 0:
            raise ValueError("stream rate must be > 0")
        return float(mode)
    raise TypeError("expected a WindowConfig or a stream sample rate")


def standard_scenarios(capacity_bytes=DEFAULT_CAPACITY_BYTES):
    """Raw 25 Hz logging versus classifying 1 s / 0.5 s and 0.4 s / 0.2 s windows."""
    return [
        StorageScenario("raw_logging", raw_logging_rate(), capacity_bytes, "raw logging (25 Hz, 4 x 4 B)"),
        StorageScenario(
            "classified", classification_rate(WindowConfig(1.0, 0.5)), capacity_bytes, "classified, 1 s windows"
        ),
        StorageScenario(
            "classified", classification_rate(WindowConfig(0.4, 0.2)), capacity_bytes, "classified, 0.4 s windows"
        ),
    ]


# --------------------------------------------------------------------------
# tables

AUTONOMY_COLUMNS = ["scenario", "mode", "rate", "unit", "capacity_bytes", "seconds", "hours", "days"]
FOOTPRINT_COLUMNS = ["config", "parameter_count", "footprint_kb", "acc", "f1"]


def autonomy_rows(scenarios):
    rows = []
    for s in scenarios:
        a = autonomy(s)
        rows.append(
            {
                "scenario": s.name or s.mode,
                "mode": s.mode,
                "rate": s.rate,
                "unit": s.unit,
                "capacity_bytes": s.capacity_bytes,
                "seconds": a.seconds,
                "hours": a.hours,
                "days": a.days,
            }
        )
    return rows


def reference_footprints(bytes_per_param=DEFAULT_BYTES_PER_PARAM):
    """Footprints of the reference IDNN shapes and dense ESN reservoirs."""
    rows = []
    for name, n_in, hidden in [("Raw_1", 100, 50), ("Features_1", 30, 50), ("Raw_0.4", 40, 50), ("Features_0.4", 30, 5)]:
        rep = FootprintReport(idnn_parameter_count(n_in, hidden), bytes_per_param)
        rows.append({"config": f"IDNN {name} {n_in}-{hidden}-1", "parameter_count": rep.parameter_count, "footprint_kb": rep.footprint_kb})
    for n in (5, 10, 100):
        rep = FootprintReport(esn_parameter_count(4 * n, n * n, n), bytes_per_param)
        rows.append({"config": f"ESN {n} units (dense)", "parameter_count": rep.parameter_count, "footprint_kb": rep.footprint_kb})
    return rows


def write_rows(rows, columns, out=None, fmt="csv"):
    """Write dict rows as CSV (or JSON list); returns text when ``out`` is None."""
    buf = out if out is not None else io.StringIO()
    if fmt == "json":
        json.dump([{c: r.get(c) for c in columns} for r in rows], buf, indent=2)
        buf.write("\n")
    else:
        w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: _cell(r.get(c)) for c in columns})
    return buf.getvalue() if out is None else None


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


__all__ = [
    "FootprintReport",
    "StorageScenario",
    "Autonomy",
    "footprint",
    "parameter_count",
    "idnn_parameter_count",
    "svm_parameter_count",
    "esn_parameter_count",
    "autonomy",
    "raw_logging_rate",
    "classification_rate",
    "standard_scenarios",
    "autonomy_rows",
    "reference_footprints",
    "write_rows",
]
