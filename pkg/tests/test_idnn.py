import math

import numpy as np
import pytest
from sklearn.base import clone

from preyhandling.exceptions import TrainingError
from preyhandling.idnn import (
    IDNNClassifier,
    IdnnConfig,
    IdnnModel,
    forward,
    gradient,
    hidden,
    init_model,
    loss,
    loss_and_gradient,
    predict_labels,
    train_rprop,
)

XOR_X = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
XOR_Y = np.array([-1, 1, 1, -1])


def sigmoid_model(W, b, v, c):
    return IdnnModel("sigmoid", {"W": np.array(W, float), "b": np.array(b, float), "v": np.array(v, float), "c": np.array([c], float)})


def random_model(rng, kind, n_in, H):
    if kind == "sigmoid":
        return sigmoid_model(rng.normal(size=(n_in, H)), rng.normal(size=H), rng.normal(size=H), rng.normal())
    return IdnnModel(
        "rbf",
        {
            "centers": rng.normal(size=(H, n_in)),
            "widths": rng.uniform(0.5, 2.0, H),
            "v": rng.normal(size=H),
            "c": rng.normal(size=1),
        },
    )


def finite_diff(model, X, t, lam, h=1e-6):
    theta = model.flat()
    g = np.empty_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (loss(model.with_flat(theta + e), X, t, lam) - loss(model.with_flat(theta - e), X, t, lam)) / (2 * h)
    return g


def test_zero_weights_score_zero_label_plus_one():
    m = sigmoid_model(np.zeros((3, 2)), np.zeros(2), np.zeros(2), 0.0)
    x = np.array([0.3, -2.0, 5.0])
    assert forward(m, x) == 0.0
    assert predict_labels(m, x).tolist() == [1]


def test_hand_traced_2_2_1():
    m = sigmoid_model(np.ones((2, 2)), [0.0, 0.0], [1.0, 1.0], 0.0)
    # hidden: tanh(1 - 1) = 0 twice; output tanh(0) = 0
    assert forward(m, [1.0, -1.0]) == 0.0
    m = sigmoid_model([[1.0, 0.5], [1.0, -1.0]], [0.5, 0.0], [1.0, -2.0], 0.25)
    h1 = math.tanh(1.0 - 1.0 + 0.5)
    h2 = math.tanh(0.5 + 1.0)
    expected = math.tanh(h1 - 2.0 * h2 + 0.25)
    assert abs(forward(m, [1.0, -1.0]) - expected) < 1e-12


def test_rbf_unit_at_center():
    rng = np.random.default_rng(0)
    m = random_model(rng, "rbf", 3, 4)
    h = hidden(m, m.params["centers"][2])
    assert h[0, 2] == 1.0


def test_dimension_mismatch():
    m = sigmoid_model(np.zeros((3, 2)), np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        forward(m, [1.0, 2.0])


@pytest.mark.parametrize("kind", ["sigmoid", "rbf"])
def test_gradient_matches_finite_differences(kind):
    rng = np.random.default_rng(5)
    for _ in range(10):
        n_in, H, n = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 8)
        m = random_model(rng, kind, n_in, H)
        X = rng.normal(size=(n, n_in))
        t = rng.choice([-1.0, 1.0], size=n)
        lam = rng.choice([0.0, 0.01, 0.1])
        ga = m.with_flat(np.zeros_like(m.flat()))  # placeholder for key order
        g = gradient(m, X, t, lam)
        flat = np.concatenate([g[k].ravel() for k in ga.params])
        fd = finite_diff(m, X, t, lam)
        err = np.linalg.norm(flat - fd) / max(np.linalg.norm(flat) + np.linalg.norm(fd), 1e-12)
        assert err < 1e-6


@pytest.mark.parametrize("kind", ["sigmoid", "rbf"])
def test_zero_error_gradient(kind):
    rng = np.random.default_rng(1)
    m = random_model(rng, kind, 3, 4)
    X = rng.normal(size=(6, 3))
    t = forward(m, X)
    g0 = gradient(m, X, t, 0.0)
    assert all(np.allclose(v, 0.0, atol=1e-15) for v in g0.values())
    g = gradient(m, X, t, 0.05)
    penalised = ("W", "v") if kind == "sigmoid" else ("v",)
    for k, v in g.items():
        expected = 2 * 0.05 * m.params[k] if k in penalised else np.zeros_like(v)
        assert np.allclose(v, expected, atol=1e-15)


def test_loss_value_includes_penalty():
    m = sigmoid_model([[1.0]], [0.0], [2.0], 0.0)
    X, t = np.array([[0.0]]), np.array([0.0])
    assert loss(m, X, t, 0.1) == pytest.approx(0.1 * (1.0 + 4.0))
    assert loss_and_gradient(m, X, t, 0.1)[0] == loss(m, X, t, 0.1)


@pytest.mark.parametrize("seed", range(3))
def test_xor(seed):
    cfg = IdnnConfig(n_in=2, n_hidden=5, hidden_kind="sigmoid", epochs=1000, seed=seed)
    model, trace = train_rprop(cfg, XOR_X, XOR_Y)
    assert trace[-1] < 0.05
    assert trace[-1] <= trace[0]
    assert np.all(np.diff(trace) <= 0)
    assert len(trace) == 1001
    assert predict_labels(model, XOR_X).tolist() == XOR_Y.tolist()


def test_training_is_deterministic():
    cfg = IdnnConfig(n_in=2, n_hidden=3, hidden_kind="rbf", epochs=50, seed=7)
    a, ta = train_rprop(cfg, XOR_X, XOR_Y)
    b, tb = train_rprop(cfg, XOR_X, XOR_Y)
    assert np.array_equal(a.flat(), b.flat()) and np.array_equal(ta, tb)


def test_single_class_rejected():
    with pytest.raises(TrainingError):
        train_rprop(IdnnConfig(n_in=2), XOR_X, np.ones(4))


def test_rbf_init():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    m = init_model(IdnnConfig(n_in=3, n_hidden=4, hidden_kind="rbf"), X)
    C = m.params["centers"]
    assert len({tuple(c) for c in C}) == 4
    assert all(any(np.array_equal(c, x) for x in X) for c in C)
    d = [np.linalg.norm(C[i] - C[j]) for i in range(4) for j in range(i + 1, 4)]
    assert np.allclose(m.params["widths"], np.median(d))


def test_hidden_permutation_invariance():
    rng = np.random.default_rng(3)
    m = random_model(rng, "sigmoid", 4, 5)
    perm = rng.permutation(5)
    p = m.params
    q = sigmoid_model(p["W"][:, perm], p["b"][perm], p["v"][perm], p["c"][0])
    X = rng.normal(size=(10, 4))
    assert np.allclose(forward(m, X), forward(q, X), atol=1e-15)


def test_classifier_api():
    est = IDNNClassifier(n_hidden=5, epochs=300)
    assert clone(est).get_params() == est.get_params()
    est.fit(XOR_X, XOR_Y)
    assert est.score(XOR_X, XOR_Y) == 1.0
    assert est.loss_curve_[-1] <= est.loss_curve_[0]
    back = IDNNClassifier.from_dict(est.to_dict())
    assert np.array_equal(back.decision_function(XOR_X), est.decision_function(XOR_X))


def test_classifier_standardize_and_gd():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-1, 1, (30, 3)), rng.normal(1, 1, (30, 3))]) * 100 + 500
    y = np.array([-1] * 30 + [1] * 30)
    est = IDNNClassifier(n_hidden=3, epochs=200, standardize=True).fit(X, y)
    assert est.score(X, y) > 0.8
    gd = IDNNClassifier(n_hidden=3, epochs=200, solver="gd", eta=0.1, momentum=0.5, standardize=True).fit(X, y)
    assert gd.loss_curve_[-1] < gd.loss_curve_[0]
    with pytest.raises(ValueError):
        IDNNClassifier(solver="lbfgs").fit(X, y)
