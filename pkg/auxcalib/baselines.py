"""
Baseline calibrators: temperature scaling, scaling-binning and Dirichlet
calibration. Samples with a NULL label have no target class and are left out
of every likelihood fit.
"""
import logging
from math import sqrt

import numpy as np
from scipy.special import log_softmax, softmax

from auxcalib.calibrator_model import CalibratorModel, validation_ece
from auxcalib.dataset import NULL_LABEL
from auxcalib.errors import FitError, InvalidModelError
from auxcalib.feed_forward_net import TrainConfig, final_loss, run_adam

logger = logging.getLogger(__name__)

PHI_RATIO = 2 / (1 + sqrt(5))
TEMPERATURE_BOUNDS = (0.05, 50.0)
DEFAULT_SB_BINS = 20
DEFAULT_RHO_GRID = (0.0, 1e-3, 1e-2, 1e-1, 1.0)
DIRICHLET_TRAIN_CONFIG = TrainConfig(epochs=200,
                                     batch_size=512,
                                     learning_rate=1e-2,
                                     seed=0)
LOG_CLAMP = 1e-12


def golden_section_search(f, lo, hi, tol=1e-4, max_iterations=500):
    """
    Minimizes a unimodal function on [lo, hi] by golden-section search.

    Args:
        f (callable): Function of one float.
        lo, hi (float): Bracket.
        tol (float): Stop when the bracket is narrower than tol.

    Returns:
        tuple: (argmin, minimum).
    """
    x1 = hi - PHI_RATIO * (hi - lo)
    x2 = lo + PHI_RATIO * (hi - lo)
    f1 = f(x1)
    f2 = f(x2)
    iteration = 0
    while abs(hi - lo) > tol and iteration < max_iterations:
        if f2 > f1:
            hi = x2
            x2, f2 = x1, f1
            x1 = hi - PHI_RATIO * (hi - lo)
            f1 = f(x1)
        else:
            lo = x1
            x1, f1 = x2, f2
            x2 = lo + PHI_RATIO * (hi - lo)
            f2 = f(x2)
        iteration += 1
    argmin = 0.5 * (lo + hi)
    return argmin, f(argmin)


def _labeled(ds, what):
    mask = ds.labels != NULL_LABEL
    if not mask.any():
        raise FitError(f"{what} needs labeled samples; all are NULL.")
    return ds.logits[mask], ds.labels[mask]


def temperature_nll(logits, labels, temperature):
    """Mean negative log-likelihood of softmax(z / T)."""
    log_p = log_softmax(logits / temperature, axis=1)
    return float(-np.mean(log_p[np.arange(len(labels)), labels]))


def _max_softmax(logits):
    p = softmax(logits, axis=1)
    return p.max(axis=1)


class TemperatureModel(CalibratorModel):
    """
    Temperature scaling: confidence = max softmax(z / T).

    Attributes:
        temperature (float): T > 0.
    """

    kind = "ts"

    def __init__(self, k, temperature, selection=None):
        super().__init__(k, selection)
        if not temperature > 0:
            raise InvalidModelError(f"Temperature must be > 0, got "
                                    f"{temperature}.")
        self.temperature = float(temperature)

    def confidences(self, logits):
        logits = self.check_logits(logits)
        return _max_softmax(logits / self.temperature)

    def parameters_dict(self):
        return {"temperature": self.temperature}

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        return cls(k, parameters["temperature"], selection)

    def __repr__(self):
        return f"TemperatureModel(k={self.k}, temperature={self.temperature})"


def fit_temperature(train, bounds=TEMPERATURE_BOUNDS, tol=1e-4):
    """
    Fits the temperature minimizing the NLL of the labeled training samples.

    Args:
        train (CalibrationDataset): Training data.
        bounds (tuple): Search interval for T.
        tol (float): Bracket width at which the search stops.

    Returns:
        TemperatureModel: The fitted model.
    """
    logits, labels = _labeled(train, "Temperature scaling")
    temperature, nll = golden_section_search(
        lambda t: temperature_nll(logits, labels, t), bounds[0], bounds[1],
        tol)
    logger.info("Fitted temperature T=%.4f (NLL %.4f) on %d samples.",
                temperature, nll, len(labels))
    return TemperatureModel(train.k,
                            temperature,
                            selection={"trainNll": nll})


def ts_confidence(m, z):
    return float(m.confidences(np.atleast_2d(z))[0])


def _tie_aware_cuts(confidences, bins):
    """
    Chunk boundaries of the sorted confidences, snapped to changes of value.

    Each boundary is the change of value closest to the equal-mass cut, so
    tied confidences always share a chunk and every chunk is non-empty.
    """
    n = len(confidences)
    _, counts = np.unique(confidences, return_counts=True)
    changes = np.cumsum(counts)[:-1]
    sizes = np.full(bins, n // bins)
    sizes[:n % bins] += 1
    targets = np.cumsum(sizes)[:-1]
    cuts, lo = [], 0
    for i, target in enumerate(targets):
        # Leave one change for each remaining cut.
        hi = len(changes) - (len(targets) - 1 - i)
        j = lo + int(np.argmin(np.abs(changes[lo:hi] - target)))
        cuts.append(int(changes[j]))
        lo = j + 1
    return cuts


def fit_histogram_bins(confidences, bins=DEFAULT_SB_BINS):
    """
    Equal-mass binning of confidences.

    The sorted confidences are cut into `bins` contiguous chunks of
    near-equal size, never splitting equal values; each bin stores its
    chunk's mean. Interior edges sit halfway between neighbouring chunks,
    outer edges are 0 and 1.

    Returns:
        tuple: (edges (bins+1,), values (bins,)).
    """
    confidences = np.sort(np.asarray(confidences, dtype=np.float64))
    bins = int(bins)
    if bins < 1:
        raise FitError(f"Need at least one bin, got {bins}.")
    n_distinct = len(np.unique(confidences))
    if bins > n_distinct:
        raise FitError(f"Cannot form {bins} bins from "
                       f"{n_distinct} distinct confidences.")
    chunks = np.split(confidences, _tie_aware_cuts(confidences, bins))
    values = np.array([chunk.mean() for chunk in chunks])
    interior = [
        0.5 * (left[-1] + right[0]) for left, right in zip(chunks[:-1],
                                                           chunks[1:])
    ]
    return np.array([0.0] + interior + [1.0]), values


class ScalingBinningModel(CalibratorModel):
    """
    Scaling-binning: temperature-scaled confidence mapped to its bin's value.

    Attributes:
        temperature (float): Inner temperature.
        bin_edges (np.ndarray): Ascending edges covering [0, 1].
        bin_values (np.ndarray): One value per bin.
    """

    kind = "sb"

    def __init__(self, k, temperature, bin_edges, bin_values, selection=None):
        super().__init__(k, selection)
        self.inner = TemperatureModel(k, temperature)
        self.bin_edges = np.asarray(bin_edges, dtype=np.float64)
        self.bin_values = np.asarray(bin_values, dtype=np.float64)
        if (len(self.bin_values) < 1
                or len(self.bin_edges) != len(self.bin_values) + 1
                or np.any(np.diff(self.bin_edges) <= 0)):
            raise InvalidModelError("Invalid scaling-binning bins.")

    @property
    def temperature(self):
        return self.inner.temperature

    def confidences(self, logits):
        scaled = self.inner.confidences(logits)
        # Values outside the edges fall into the first or last bin.
        index = np.searchsorted(self.bin_edges[1:-1], scaled, side="right")
        return self.bin_values[index]

    def parameters_dict(self):
        return {
            "temperature": self.temperature,
            "binEdges": self.bin_edges.tolist(),
            "binValues": self.bin_values.tolist(),
        }

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        return cls(k, parameters["temperature"], parameters["binEdges"],
                   parameters["binValues"], selection)


def fit_scaling_binning(train, bins=DEFAULT_SB_BINS, temperature=None):
    """
    Fits scaling-binning.

    The temperature is fitted on the first half of train, the bins on the
    scaled confidences of the second half. With a fixed temperature the whole
    training set builds the bins.
    """
    n = len(train)
    if n == 0:
        raise FitError("Scaling-binning needs training samples.")
    if temperature is None:
        if n < 2:
            raise FitError("Scaling-binning needs at least 2 samples.")
        half = n // 2
        temperature = fit_temperature(train.subset(range(half))).temperature
        binning_set = train.subset(range(half, n))
    else:
        binning_set = train
    scaled = TemperatureModel(train.k,
                              temperature).confidences(binning_set.logits)
    edges, values = fit_histogram_bins(scaled, bins)
    logger.info("Fitted scaling-binning with T=%.4f and %d bins.", temperature,
                bins)
    return ScalingBinningModel(train.k,
                               temperature,
                               edges,
                               values,
                               selection={"bins": int(bins)})


def sb_confidence(m, z):
    return float(m.confidences(np.atleast_2d(z))[0])


def _clamped_log_probs(logits):
    return np.maximum(log_softmax(logits, axis=1), np.log(LOG_CLAMP))


class DirichletModel(CalibratorModel):
    """
    Dirichlet calibration: mu = softmax(W ln p + b); confidence = max mu.

    Attributes:
        weights (np.ndarray): (K, K) matrix W.
        bias (np.ndarray): (K,) vector b.
        rho (float): Off-diagonal regularization weight it was fitted with.
    """

    kind = "dirichlet"

    def __init__(self, k, weights, bias, rho=0.0, selection=None):
        super().__init__(k, selection)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.rho = float(rho)
        if self.weights.shape != (self.k, self.k) or self.bias.shape != (
                self.k, ):
            raise InvalidModelError(
                f"Dirichlet parameters do not match K={self.k}.")
        if not (np.all(np.isfinite(self.weights))
                and np.all(np.isfinite(self.bias))):
            raise InvalidModelError("Dirichlet parameters must be finite.")

    @staticmethod
    def identity(k):
        return DirichletModel(k, np.eye(k), np.zeros(k))

    def probs(self, logits):
        logits = self.check_logits(logits)
        return softmax(
            _clamped_log_probs(logits) @ self.weights.T + self.bias, axis=1)

    def confidences(self, logits):
        return self.probs(logits).max(axis=1)

    def parameters_dict(self):
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "rho": self.rho,
        }

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        return cls(k, parameters["weights"], parameters["bias"],
                   parameters.get("rho", 0.0), selection)


def dirichlet_probs(m, z):
    return m.probs(np.atleast_2d(z))[0]


def off_diagonal_norm(weights):
    weights = np.asarray(weights)
    return float(np.sqrt(np.sum((weights * (1 - np.eye(len(weights))))**2)))


def _fit_dirichlet_rho(log_probs, labels, rho, train_cfg):
    k = log_probs.shape[1]
    off_diagonal = 1.0 - np.eye(k)
    one_hot = np.eye(k)[labels]

    def loss_and_grad(params, indices):
        weights, bias = params
        x = log_probs[indices]
        a = x @ weights.T + bias
        log_mu = log_softmax(a, axis=1)
        nll = -np.mean(np.sum(one_hot[indices] * log_mu, axis=1))
        penalty = rho * np.sum((weights * off_diagonal)**2)
        d_a = (np.exp(log_mu) - one_hot[indices]) / len(indices)
        grad_w = d_a.T @ x + 2.0 * rho * weights * off_diagonal
        return nll + penalty, [grad_w, d_a.sum(axis=0)]

    params, trace = run_adam([np.eye(k), np.zeros(k)], loss_and_grad,
                             len(labels), train_cfg)
    return params, trace


def fit_dirichlet(train,
                  val,
                  rho_grid=DEFAULT_RHO_GRID,
                  train_cfg=DIRICHLET_TRAIN_CONFIG,
                  n_bins=20):
    """
    Fits Dirichlet calibration for each rho and keeps the one with minimal
    validation ECE (first in grid order on ties).

    The objective is the mean NLL plus rho times the squared off-diagonal
    entries of W; W starts at the identity and b at zero.

    Returns:
        DirichletModel: The selected model.
    """
    rho_grid = list(rho_grid)
    if not rho_grid:
        raise FitError("Dirichlet calibration needs a non-empty rho grid.")
    if val.k != train.k:
        raise FitError(f"Train K={train.k} and validation K={val.k} differ.")
    if len(val) == 0:
        raise FitError("Dirichlet calibration needs validation samples.")
    logits, labels = _labeled(train, "Dirichlet calibration")
    log_probs = _clamped_log_probs(logits)
    best, candidates = None, []
    for rho in rho_grid:
        (weights, bias), trace = _fit_dirichlet_rho(log_probs, labels,
                                                    float(rho), train_cfg)
        model = DirichletModel(train.k, weights, bias, rho)
        val_ece = validation_ece(model, val, n_bins)
        logger.debug("Dirichlet rho=%g final training loss %.6f", rho,
                     final_loss(trace))
        candidates.append({"rho": float(rho), "validationEce": val_ece})
        logger.info("Dirichlet rho=%g: validation ECE %.4f", rho, val_ece)
        if best is None or val_ece < best[1]:
            best = (model, val_ece)
    model, val_ece = best
    model.selection = {
        "rho": model.rho,
        "validationEce": val_ece,
        "candidates": candidates,
    }
    return model
