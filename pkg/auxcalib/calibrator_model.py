"""
Module defining the CalibratorModel base class shared by every fitted
calibrator, and the parameter-free max-probability model.
"""
import numpy as np

from auxcalib.dataset import correctness, predict_batch
from auxcalib.errors import InvalidModelError
from auxcalib.metrics import DEFAULT_BINS, ece_arrays


class CalibratorModel:
    """
    A fitted calibrator mapping target-classifier logits to a confidence.

    Subclasses set `kind` and implement confidences(), parameters_dict() and
    from_parameters().

    Attributes:
        k (int): Class count of the target classifier.
        selection (dict): How the model was selected (grid point, validation
            ECE, candidates). Empty for models without selection.
    """

    kind = None

    def __init__(self, k, selection=None):
        self.k = int(k)
        self.selection = dict(selection or {})

    def check_k(self, k):
        if int(k) != self.k:
            raise InvalidModelError(
                f"{self.kind} model was fitted for K={self.k} but the data has "
                f"K={k}.")

    def check_logits(self, logits):
        logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
        if logits.shape[0] > 0:
            self.check_k(logits.shape[1])
        return logits

    def confidences(self, logits):
        """
        Calibrated confidence of the target classifier's predicted label.

        Args:
            logits (np.ndarray): (N, K) logits.

        Returns:
            np.ndarray: (N,) confidences in [0, 1].
        """
        raise NotImplementedError

    def parameters_dict(self):
        raise NotImplementedError

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(k={self.k})"


class MaxProbabilityModel(CalibratorModel):
    """
    The un-calibrated confidence: the maximum softmax probability.
    """

    kind = "mp"

    def confidences(self, logits):
        logits = self.check_logits(logits)
        return predict_batch(logits)[1]

    def parameters_dict(self):
        return {}

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        return cls(k, selection)


def outcome_arrays(model, ds):
    """
    (confidences, correct) arrays of a model over a dataset. Correctness is
    the target classifier's, NULL counting as wrong.
    """
    model.check_k(ds.k)
    if len(ds) == 0:
        return np.zeros(0), np.zeros(0, dtype=bool)
    return model.confidences(ds.logits), correctness(ds)


def validation_ece(model, ds, n_bins=DEFAULT_BINS):
    """ECE of a model on a validation set, as used for model selection."""
    return ece_arrays(*outcome_arrays(model, ds), n_bins)
