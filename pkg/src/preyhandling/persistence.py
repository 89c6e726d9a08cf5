"""JSON model artifacts, dispatched on their ``kind`` field."""

from __future__ import annotations

import json

from .esn import ESNClassifier
from .exceptions import ParseError
from .idnn import IDNNClassifier
from .svm import SVMClassifier

FORMAT_VERSION = 1
_KINDS = {"idnn": IDNNClassifier, "svm": SVMClassifier, "esn": ESNClassifier}


def dumps(estimator) -> str:
    d = {"format_version": FORMAT_VERSION, **estimator.to_dict()}
    return json.dumps(d, indent=1, sort_keys=True) + "\n"


def loads(text: str):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model artifact is not JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(d, dict) or d.get("kind") not in _KINDS:
        raise ParseError(f"model artifact kind must be one of {sorted(_KINDS)}")
    try:
        return _KINDS[d["kind"]].from_dict(d)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed {d['kind']} artifact: {exc}") from None


def save_model(estimator, path):
    with open(path, "w") as fh:
        fh.write(dumps(estimator))


def load_model(path):
    with open(path) as fh:
        return loads(fh.read())


__all__ = ["dumps", "loads", "save_model", "load_model"]
