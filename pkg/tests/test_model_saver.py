import json

import numpy as np
import pytest

from auxcalib import __version__
from auxcalib.baselines import (DirichletModel, ScalingBinningModel,
                                TemperatureModel)
from auxcalib.calibrator_model import MaxProbabilityModel
from auxcalib.calibrators import (CcacModel, CcacSModel, CcacTModel,
                                  ConfidenceRule)
from auxcalib.errors import InvalidModelError
from auxcalib.feed_forward_net import FeedForwardNet, LossConfig
from auxcalib.model_saver import (convert_to_serializable, dumps_model,
                                  load_model, model_from_dict, model_to_dict,
                                  save_model)


def _models():
    rule = ConfidenceRule.GEO_MEAN_PRODUCT
    aux_net = FeedForwardNet.initialize([3, 5, 3, 1], seed=1)
    return [
        MaxProbabilityModel(3),
        TemperatureModel(3, 1.7, selection={"trainNll": 0.4}),
        ScalingBinningModel(3, 1.2, [0.0, 0.5, 1.0], [0.4, 0.8]),
        DirichletModel(3, np.eye(3) * 1.5, [0.1, 0.0, -0.1], rho=0.01),
        CcacModel(3, FeedForwardNet.initialize([3, 4, 4], seed=0),
                  LossConfig(0.5, 2.0), rule),
        CcacSModel(3, 0.8, aux_net, LossConfig(1.0, 1.0), rule),
        CcacTModel(3, 1.3, aux_net, LossConfig(1.0, 0.0), rule,
                   fixed_aux_logit=-50.0),
    ]


@pytest.mark.parametrize("model", _models(), ids=lambda m: m.kind)
def test_saved_model_predicts_identically(tmp_path, rng, model):
    path = str(tmp_path / "model.json")
    save_model(model, path)
    loaded = load_model(path)
    assert type(loaded) is type(model)
    assert loaded.k == model.k
    logits = rng.normal(scale=3.0, size=(20, 3))
    np.testing.assert_array_equal(loaded.confidences(logits),
                                  model.confidences(logits))
    assert dumps_model(loaded) == dumps_model(model)


def test_envelope_fields():
    data = model_to_dict(TemperatureModel(4, 2.0))
    assert data["kind"] == "ts"
    assert data["formatVersion"] == 1
    assert data["parameters"] == {"temperature": 2.0}
    assert data["generator"]["version"] == __version__
    assert data["selection"] == {}


def test_ccacs_keeps_temperature_and_rule():
    model = _models()[5]
    loaded = model_from_dict(json.loads(dumps_model(model)))
    assert loaded.temperature == pytest.approx(0.8, abs=1e-15)
    assert loaded.rule is ConfidenceRule.GEO_MEAN_PRODUCT
    assert loaded.loss_cfg == model.loss_cfg


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("kind"),
    lambda d: d.update(kind="platt"),
    lambda d: d.update(formatVersion=2),
    lambda d: d.update(k=1),
    lambda d: d["parameters"].update(temperature=-1.0),
    lambda d: d["parameters"].pop("temperature"),
])
def test_invalid_envelopes(mutate):
    data = model_to_dict(TemperatureModel(3, 2.0))
    mutate(data)
    with pytest.raises(InvalidModelError):
        model_from_dict(data)


def test_inconsistent_parameters_are_rejected():
    data = model_to_dict(DirichletModel.identity(3))
    data["k"] = 4
    with pytest.raises(InvalidModelError):
        model_from_dict(data)
    data = model_to_dict(_models()[4])
    data["parameters"]["net"]["layerSizes"] = [3, 4, 5]
    with pytest.raises(InvalidModelError):
        model_from_dict(data)


def test_load_model_file_errors(tmp_path):
    with pytest.raises(InvalidModelError):
        load_model(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidModelError):
        load_model(str(broken))


def test_convert_to_serializable():
    data = {
        1: np.float64(0.5),
        "a": np.arange(3),
        "b": (np.int64(2), [np.bool_(True)]),
    }
    assert convert_to_serializable(data) == {
        "1": 0.5,
        "a": [0, 1, 2],
        "b": [2, [True]],
    }
