KINDS = ["mp", "ts", "sb", "dirichlet", "ccac", "ccac-s"]
RULE_NAMES = ["geo_mean_complement", "geo_mean_product"]
EVAL_SPLITS = ["all", "train", "val", "test"]

DEFAULT_CONFIG_CONTENT = {
    "dataset": "dataset.csv",
    "format": None,
    "model": None,
    "split": {
        "train": 0.6,
        "val": 0.2,
        "test": 0.2
    },
    "evalSplit": "all",
    "kind": "ccac",
    "hiddenLayers": [50, 20],
    "auxHiddenLayers": None,
    "lambda1Values": [0.0, 0.5, 1.0, 2.0],
    "lambda2Values": [0.0, 0.5, 1.0, 2.0],
    "rules": RULE_NAMES,
    "epochs": 100,
    "batchSize": 256,
    "learningRate": 0.001,
    "rhoValues": [0.0, 0.001, 0.01, 0.1, 1.0],
    "sbBins": 20,
    "bins": 20,
    "out": "out",
    "seed": 0,
    "transferTrainSamples": 320,
    "transferValSamples": 200,
    "transferEpochs": 200,
    "synth": {
        "k": 10,
        "nIn": 6000,
        "nShift": 2000,
        "nOod": 2000,
        "inMargin": 6.0,
        "shiftMargin": 2.0,
        "oodConfidenceBoost": 10.0
    },
    "verbose": False
}

_NON_NEGATIVE_LIST = {
    "type": "array",
    "items": {
        "type": "number",
        "minimum": 0
    },
    "minItems": 1
}

_LAYERS = {
    "type": "array",
    "items": {
        "type": "integer",
        "minimum": 1
    }
}

_FRACTION = {"type": "number", "minimum": 0, "maximum": 1}

CONFIG_SCHEMA = {
    "type":
    "object",
    "properties": {
        "dataset": {
            "type": ["string", "null"]
        },
        "format": {
            "enum": ["csv", "jsonl", None]
        },
        "model": {
            "type": ["string", "null"]
        },
        "split": {
            "type": "object",
            "properties": {
                "train": _FRACTION,
                "val": _FRACTION,
                "test": _FRACTION
            },
            "required": ["train", "val", "test"],
            "additionalProperties": False
        },
        "evalSplit": {
            "type": "string",
            "enum": EVAL_SPLITS
        },
        "kind": {
            "type": "string",
            "enum": KINDS
        },
        "hiddenLayers": _LAYERS,
        "auxHiddenLayers": {
            "anyOf": [_LAYERS, {
                "type": "null"
            }]
        },
        "lambda1Values": _NON_NEGATIVE_LIST,
        "lambda2Values": _NON_NEGATIVE_LIST,
        "rules": {
            "type": "array",
            "items": {
                "type": "string",
                "enum": RULE_NAMES
            },
            "minItems": 1,
            "uniqueItems": True
        },
        "epochs": {
            "type": "integer",
            "minimum": 1
        },
        "batchSize": {
            "type": "integer",
            "minimum": 1
        },
        "learningRate": {
            "type": "number",
            "exclusiveMinimum": 0
        },
        "rhoValues": _NON_NEGATIVE_LIST,
        "sbBins": {
            "type": "integer",
            "minimum": 1
        },
        "bins": {
            "type": "integer",
            "minimum": 1
        },
        "out": {
            "type": "string"
        },
        "seed": {
            "type": "integer",
            "minimum": 0
        },
        "transferTrainSamples": {
            "type": "integer",
            "minimum": 1
        },
        "transferValSamples": {
            "type": "integer",
            "minimum": 1
        },
        "transferEpochs": {
            "type": "integer",
            "minimum": 1
        },
        "synth": {
            "type": "object",
            "properties": {
                "k": {
                    "type": "integer",
                    "minimum": 2
                },
                "nIn": {
                    "type": "integer",
                    "minimum": 0
                },
                "nShift": {
                    "type": "integer",
                    "minimum": 0
                },
                "nOod": {
                    "type": "integer",
                    "minimum": 0
                },
                "inMargin": {
                    "type": "number",
                    "exclusiveMinimum": 0
                },
                "shiftMargin": {
                    "type": "number",
                    "exclusiveMinimum": 0
                },
                "oodConfidenceBoost": {
                    "type": "number",
                    "exclusiveMinimum": 0
                }
            },
            "required": [
                "k", "nIn", "nShift", "nOod", "inMargin", "shiftMargin",
                "oodConfidenceBoost"
            ],
            "additionalProperties": False
        },
        "verbose": {
            "type": "boolean"
        }
    },
    "required":
    list(DEFAULT_CONFIG_CONTENT),
    "additionalProperties":
    False,
}
