"""On-board prey-handling classification from accelerometer and depth streams.

Pipeline: labelled 25 Hz streams (:mod:`.data`) are cut into overlapping
windows (:mod:`.windowing`), optionally reduced to 30 statistics
(:mod:`.features`), and classified by an input-delay network
(:mod:`.idnn`), a kernel SVM (:mod:`.svm`) or, directly on the stream, an
echo state network (:mod:`.esn`). :mod:`.evaluation` runs model selection
and :mod:`.budget` accounts for model memory and logger storage.
"""

__version__ = "0.1.0"

from .budget import FootprintReport, StorageScenario, autonomy, classification_rate, footprint
from .data import SynthConfig, TimeSeries, parse_csv, read_csv, synthesize, write_csv
from .esn import ESNClassifier, EsnConfig
from .evaluation import ConfusionMatrix, GridSpec, grid_search, kfold_split, metrics, split_average, stratified_split
from .exceptions import (
    BalanceError,
    ConfigurationError,
    ConvergenceError,
    ModelStateError,
    NumericalError,
    OrderingError,
    ParseError,
    PreyHandlingError,
    TrainingError,
)
from .features import FeatureExtractor, extract, featurize
from .idnn import IDNNClassifier, IdnnConfig
from .persistence import load_model, save_model
from .svm import KernelSpec, SVMClassifier
from .windowing import WindowConfig, Windows, balance, segment

__all__ = [
    "__version__",
    "TimeSeries",
    "SynthConfig",
    "parse_csv",
    "read_csv",
    "write_csv",
    "synthesize",
    "WindowConfig",
    "Windows",
    "segment",
    "balance",
    "extract",
    "featurize",
    "FeatureExtractor",
    "IdnnConfig",
    "IDNNClassifier",
    "KernelSpec",
    "SVMClassifier",
    "EsnConfig",
    "ESNClassifier",
    "ConfusionMatrix",
    "metrics",
    "kfold_split",
    "stratified_split",
    "GridSpec",
    "grid_search",
    "split_average",
    "FootprintReport",
    "StorageScenario",
    "footprint",
    "autonomy",
    "classification_rate",
    "save_model",
    "load_model",
    "PreyHandlingError",
    "ParseError",
    "OrderingError",
    "ConfigurationError",
    "BalanceError",
    "TrainingError",
    "ConvergenceError",
    "NumericalError",
    "ModelStateError",
]
