import json

import numpy as np
import pytest

from preyhandling.esn import ESNClassifier
from preyhandling.exceptions import ParseError
from preyhandling.idnn import IDNNClassifier
from preyhandling.persistence import dumps, load_model, loads, save_model
from preyhandling.svm import SVMClassifier


def data(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 6))
    return X, np.where(X[:, 0] + X[:, 1] > 0, 1, -1)


@pytest.mark.parametrize(
    "est",
    [
        IDNNClassifier(n_hidden=3, epochs=20, standardize=True),
        IDNNClassifier(n_hidden=3, hidden_kind="rbf", epochs=20),
        SVMClassifier(kernel="poly3", C=0.5, standardize=True),
    ],
)
def test_table_models_roundtrip(tmp_path, est):
    X, y = data()
    est.fit(X, y)
    p = tmp_path / "m.json"
    save_model(est, p)
    back = load_model(p)
    assert type(back) is type(est)
    assert back.get_params() == est.get_params()
    assert np.array_equal(back.decision_function(X), est.decision_function(X))
    assert dumps(back) == dumps(est)


def test_esn_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    U = rng.normal(size=(300, 4))
    est = ESNClassifier(n_reservoir=10, connectivity=0.2).fit(U, np.where(U[:, 1] > 0, 1, -1))
    d = json.loads(dumps(est))
    assert d["kind"] == "esn" and all(len(t) == 3 for t in d["model"]["W"])
    back = loads(dumps(est))
    assert np.array_equal(back.predict(U), est.predict(U))


def test_bad_artifacts():
    with pytest.raises(ParseError):
        loads("{not json")
    with pytest.raises(ParseError):
        loads('{"kind": "knn"}')
    with pytest.raises(ParseError):
        loads('{"kind": "svm"}')
