import numpy as np
import pytest

from preyhandling.budget import (
    AUTONOMY_COLUMNS,
    StorageScenario,
    autonomy,
    autonomy_rows,
    classification_rate,
    esn_parameter_count,
    footprint,
    FootprintReport,
    idnn_parameter_count,
    raw_logging_rate,
    reference_footprints,
    standard_scenarios,
    svm_parameter_count,
    write_rows,
)
from preyhandling.esn import ESNClassifier, EsnConfig, init
from preyhandling.exceptions import ModelStateError
from preyhandling.idnn import IDNNClassifier
from preyhandling.svm import SVMClassifier
from preyhandling.windowing import WindowConfig


@pytest.mark.parametrize("n_in, hidden, kb", [(100, 50, 39.45), (30, 50, 12.11), (40, 50, 16.02), (30, 5, 1.21)])
def test_idnn_reference_shapes(n_in, hidden, kb):
    rep = FootprintReport(idnn_parameter_count(n_in, hidden))
    assert round(rep.footprint_kb, 2) == kb


def test_report_consistency():
    rep = FootprintReport(155, 4)
    assert rep.bytes == 620 and abs(rep.footprint_kb - 620 / 1024) < 1e-9


def test_monotone_in_every_dimension():
    assert idnn_parameter_count(31, 5) > idnn_parameter_count(30, 5)
    assert idnn_parameter_count(30, 6) > idnn_parameter_count(30, 5)
    assert svm_parameter_count(11, 4) > svm_parameter_count(10, 4)
    assert svm_parameter_count(10, 5) > svm_parameter_count(10, 4)
    assert esn_parameter_count(24, 30, 6) > esn_parameter_count(20, 25, 5)


def test_fitted_models():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 30))
    y = np.where(X[:, 0] > 0, 1, -1)
    idnn = IDNNClassifier(n_hidden=5, epochs=5).fit(X, y)
    assert footprint(idnn).parameter_count == 155
    assert footprint(idnn.model_) == footprint(idnn)
    svm = SVMClassifier(kernel="linear").fit(X, y)
    assert footprint(svm).parameter_count == svm.n_support_ * 31 + 1
    U = rng.normal(size=(200, 4))
    esn = ESNClassifier(connectivity=1.0).fit(U, np.where(U[:, 0] > 0, 1, -1))
    assert footprint(esn).parameter_count == 51
    assert footprint(esn).footprint_kb == pytest.approx(0.4, rel=0.05)


def test_untrained_models():
    with pytest.raises(ModelStateError):
        footprint(IDNNClassifier())
    with pytest.raises(ModelStateError):
        footprint(init(EsnConfig()))
    with pytest.raises(TypeError):
        footprint(object())


def test_autonomy_reference_values():
    raw = autonomy(StorageScenario("raw_logging", 400.0))
    assert raw.seconds == 20971.52
    assert raw.hours == pytest.approx(5.825, abs=1e-3)
    two = autonomy(StorageScenario("classified", 2.0))
    assert two.hours == pytest.approx(9320.675555, rel=1e-9) and two.days > 388
    five = autonomy(StorageScenario("classified", 5.0))
    assert five.hours == pytest.approx(3728.270222, rel=1e-9) and round(five.days) == 155


def test_autonomy_scaling():
    base = autonomy(StorageScenario("classified", 3.0, 1000)).seconds
    assert autonomy(StorageScenario("classified", 3.0, 2000)).seconds == 2 * base
    assert autonomy(StorageScenario("classified", 6.0, 1000)).seconds == base / 2


def test_scenario_validation():
    for args in (("raw_logging", 0.0), ("classified", -1.0), ("streaming", 1.0)):
        with pytest.raises(ValueError):
            StorageScenario(*args)
    with pytest.raises(ValueError):
        StorageScenario("raw_logging", 1.0, 0)


def test_classification_rate():
    assert classification_rate(WindowConfig(1.0, 0.5)) == 2.0
    assert classification_rate(WindowConfig(0.4, 0.2)) == pytest.approx(5.0)
    assert classification_rate(WindowConfig(1.0, 0.0)) == 1.0
    assert classification_rate(25.0) == 25.0
    assert raw_logging_rate() == 400.0


def test_tables():
    text = write_rows(autonomy_rows(standard_scenarios()), AUTONOMY_COLUMNS)
    lines = text.splitlines()
    assert lines[0] == ",".join(AUTONOMY_COLUMNS)
    assert len(lines) == 4 and "20971.52" in lines[1]
    ref = reference_footprints()
    assert [round(r["footprint_kb"], 2) for r in ref[:4]] == [39.45, 12.11, 16.02, 1.21]
    assert ref[4]["parameter_count"] == 51
