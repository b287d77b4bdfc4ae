"""
Module to enable the save and load of fitted calibrators as JSON model files.

Every file shares one envelope tagged by the calibrator kind; the
kind-specific content sits under "parameters".
"""
import json
import logging
import os

import numpy as np
from jsonschema import ValidationError, validate

from auxcalib import APP_NAME, __version__
from auxcalib.baselines import (DirichletModel, ScalingBinningModel,
                                TemperatureModel)
from auxcalib.calibrator_model import MaxProbabilityModel
from auxcalib.calibrators import CcacModel, CcacSModel, CcacTModel
from auxcalib.errors import InvalidModelError

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

MODEL_CLASSES = {
    model_class.kind: model_class
    for model_class in (MaxProbabilityModel, TemperatureModel,
                        ScalingBinningModel, DirichletModel, CcacModel,
                        CcacSModel, CcacTModel)
}

_NET_SCHEMA = {
    "type": "object",
    "properties": {
        "formatVersion": {
            "const": 1
        },
        "layerSizes": {
            "type": "array",
            "items": {
                "type": "integer",
                "minimum": 1
            },
            "minItems": 2
        },
        "layers": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "weights": {
                        "type": "array"
                    },
                    "bias": {
                        "type": "array"
                    }
                },
                "required": ["weights", "bias"]
            },
            "minItems": 1
        },
        "lossConfig": {
            "type": "object",
            "properties": {
                "lambda1": {
                    "type": "number",
                    "minimum": 0
                },
                "lambda2": {
                    "type": "number",
                    "minimum": 0
                },
                "epsLog": {
                    "type": "number",
                    "exclusiveMinimum": 0
                }
            },
            "required": ["lambda1", "lambda2"]
        }
    },
    "required": ["formatVersion", "layerSizes", "layers", "lossConfig"]
}

_RULE_SCHEMA = {"enum": ["geo_mean_complement", "geo_mean_product"]}

_CCACS_PARAMETERS = {
    "type": "object",
    "properties": {
        "temperature": {
            "type": "number",
            "exclusiveMinimum": 0
        },
        "auxNet": _NET_SCHEMA,
        "rule": _RULE_SCHEMA,
        "fixedAuxLogit": {
            "type": ["number", "null"]
        }
    },
    "required": ["temperature", "auxNet", "rule"]
}

PARAMETER_SCHEMAS = {
    "mp": {
        "type": "object"
    },
    "ts": {
        "type": "object",
        "properties": {
            "temperature": {
                "type": "number",
                "exclusiveMinimum": 0
            }
        },
        "required": ["temperature"]
    },
    "sb": {
        "type": "object",
        "properties": {
            "temperature": {
                "type": "number",
                "exclusiveMinimum": 0
            },
            "binEdges": {
                "type": "array",
                "items": {
                    "type": "number"
                },
                "minItems": 2
            },
            "binValues": {
                "type": "array",
                "items": {
                    "type": "number",
                    "minimum": 0,
                    "maximum": 1
                },
                "minItems": 1
            }
        },
        "required": ["temperature", "binEdges", "binValues"]
    },
    "dirichlet": {
        "type": "object",
        "properties": {
            "weights": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {
                        "type": "number"
                    }
                }
            },
            "bias": {
                "type": "array",
                "items": {
                    "type": "number"
                }
            },
            "rho": {
                "type": "number",
                "minimum": 0
            }
        },
        "required": ["weights", "bias"]
    },
    "ccac": {
        "type": "object",
        "properties": {
            "net": _NET_SCHEMA,
            "rule": _RULE_SCHEMA
        },
        "required": ["net", "rule"]
    },
    "ccac-s": _CCACS_PARAMETERS,
    "ccac-t": _CCACS_PARAMETERS,
}

ENVELOPE_SCHEMA = {
    "type": "object",
    "properties": {
        "formatVersion": {
            "const": MODEL_FORMAT_VERSION
        },
        "kind": {
            "enum": sorted(MODEL_CLASSES)
        },
        "k": {
            "type": "integer",
            "minimum": 2
        },
        "parameters": {
            "type": "object"
        },
        "selection": {
            "type": "object"
        },
        "generator": {
            "type": "object",
            "properties": {
                "name": {
                    "type": "string"
                },
                "version": {
                    "type": "string"
                }
            }
        }
    },
    "required": ["formatVersion", "kind", "k", "parameters"]
}


def convert_to_serializable(data):
    """
    Recursively convert NumPy data types to native Python types (int, float,
    list).
    """
    if isinstance(data, dict):
        return {
            str(key): convert_to_serializable(value)
            for key, value in data.items()
        }
    if isinstance(data, (list, tuple)):
        return [convert_to_serializable(item) for item in data]
    if isinstance(data, np.ndarray):
        return convert_to_serializable(data.tolist())
    if isinstance(data, np.generic):
        return data.item()
    return data


def _validate(document, schema, what):
    try:
        validate(instance=document, schema=schema)
    except ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InvalidModelError(f"{what}: {location}: {e.message}") from e


def model_to_dict(model):
    return convert_to_serializable({
        "formatVersion": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "k": model.k,
        "parameters": model.parameters_dict(),
        "selection": model.selection,
        "generator": {
            "name": APP_NAME,
            "version": __version__
        },
    })


def model_from_dict(data):
    """
    Rebuilds a calibrator from its envelope dictionary.

    Raises:
        InvalidModelError: If the envelope or the parameters do not validate.
    """
    _validate(data, ENVELOPE_SCHEMA, "Invalid model file")
    kind = data["kind"]
    _validate(data["parameters"], PARAMETER_SCHEMAS[kind],
              f"Invalid {kind} parameters")
    try:
        return MODEL_CLASSES[kind].from_parameters(data["k"],
                                                   data["parameters"],
                                                   data.get("selection"))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidModelError(f"Invalid {kind} parameters: {e}") from e


def dumps_model(model):
    return json.dumps(model_to_dict(model), indent=4, sort_keys=True) + "\n"


def save_model(model, path):
    """
    Writes a fitted calibrator to a JSON model file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        file.write(dumps_model(model))
    logger.info("Saved %s model to %s.", model.kind, path)


def load_model(path):
    """
    Loads a calibrator written by save_model.

    Raises:
        InvalidModelError: If the file is missing, not JSON, or malformed.
    """
    if not os.path.isfile(path):
        raise InvalidModelError(f"Model file {path} does not exist.")
    with open(path, "r", encoding="utf-8") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as e:
            raise InvalidModelError(f"Model file {path} is not valid JSON: "
                                    f"{e.msg}") from e
    model = model_from_dict(data)
    logger.info("Loaded %s model (K=%d) from %s.", model.kind, model.k, path)
    return model
