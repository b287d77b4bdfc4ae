"""
Module defining the RunConfig class, the typed view of a resolved run
configuration.
"""
import copy
import os

from auxcalib.calibrators import ConfidenceRule, HyperGrid
from auxcalib.dataset import SplitSpec
from auxcalib.errors import ConfigError, InvalidInputError
from auxcalib.feed_forward_net import TrainConfig
from auxcalib.synth import SynthConfig
from auxcalib.utils import derive_seed

# Input files each command reads.
REQUIRED_INPUTS = {
    "synth": (),
    "fit": ("dataset", ),
    "eval": ("dataset", "model"),
    "transfer": ("dataset", "model"),
    "compare": ("dataset", ),
}

# Inputs a command uses when they are given.
OPTIONAL_INPUTS = {
    "compare": ("model", ),
}


class RunConfig:
    """
    Parameters of one command run.

    Attributes:
        config (dict): The schema-valid configuration it was built from.
        seed (int): Master seed; every random component derives its own
            seed from it.
        bins (int): Bin count M of the metrics.
        out (str): Output directory.
        warnings (list): Configuration fields that were repaired.
    """

    def __init__(self, config, warnings=None):
        self.config = copy.deepcopy(config)
        self.warnings = list(warnings or [])
        self.dataset = config["dataset"]
        self.format = config["format"]
        self.model = config["model"]
        self.kind = config["kind"]
        self.eval_split = config["evalSplit"]
        self.hidden_layers = tuple(config["hiddenLayers"])
        self.aux_hidden_layers = (None if config["auxHiddenLayers"] is None
                                  else tuple(config["auxHiddenLayers"]))
        self.rules = tuple(ConfidenceRule.parse(r) for r in config["rules"])
        self.rho_values = tuple(float(r) for r in config["rhoValues"])
        self.sb_bins = int(config["sbBins"])
        self.bins = int(config["bins"])
        self.out = config["out"]
        self.seed = int(config["seed"])
        self.transfer_train_samples = int(config["transferTrainSamples"])
        self.transfer_val_samples = int(config["transferValSamples"])
        self.verbose = bool(config["verbose"])

    @staticmethod
    def from_load_config(load_config):
        return RunConfig(load_config.get_config(), load_config.warnings)

    def check(self, command):
        """
        Validates what the schema cannot: input files of the command exist,
        the split is a partition, M >= 1.

        Raises:
            ConfigError: On the first violated constraint.
        """
        for key in REQUIRED_INPUTS[command]:
            path = getattr(self, key)
            if not path:
                raise ConfigError(f"{command} requires --{key}.")
            if not os.path.isfile(path):
                raise ConfigError(f"{key} file {path} does not exist.")
        for key in OPTIONAL_INPUTS.get(command, ()):
            path = getattr(self, key)
            if path and not os.path.isfile(path):
                raise ConfigError(f"{key} file {path} does not exist.")
        if self.bins < 1:
            raise ConfigError(f"Bin count must be >= 1, got {self.bins}.")
        try:
            self.split_spec()
        except InvalidInputError as e:
            raise ConfigError(str(e)) from e
        return self

    def derived_seed(self, component):
        return derive_seed(self.seed, component)

    def split_spec(self):
        split = self.config["split"]
        return SplitSpec(split["train"], split["val"], split["test"],
                         self.derived_seed("split"))

    def synth_config(self):
        synth = self.config["synth"]
        return SynthConfig(k=synth["k"],
                           n_in=synth["nIn"],
                           n_shift=synth["nShift"],
                           n_ood=synth["nOod"],
                           in_margin=float(synth["inMargin"]),
                           shift_margin=float(synth["shiftMargin"]),
                           ood_confidence_boost=float(
                               synth["oodConfidenceBoost"]),
                           seed=self.derived_seed("synth"))

    def train_config(self, component, epochs=None):
        return TrainConfig(epochs=int(epochs or self.config["epochs"]),
                           batch_size=int(self.config["batchSize"]),
                           learning_rate=float(self.config["learningRate"]),
                           seed=self.derived_seed(component))

    def transfer_train_config(self):
        return self.train_config("transfer", self.config["transferEpochs"])

    def hyper_grid(self):
        return HyperGrid(
            tuple(float(v) for v in self.config["lambda1Values"]),
            tuple(float(v) for v in self.config["lambda2Values"]))

    def to_dict(self):
        """The resolved configuration, as embedded in manifests for replay."""
        return copy.deepcopy(self.config)

    def __repr__(self):
        return f"RunConfig(kind={self.kind}, seed={self.seed}, out={self.out})"
