"""
Calibrators trained with an auxiliary "misclassified" class.

CCAC maps the K target logits through a small network to K+1 logits. CCAC-S
keeps the K logits, divides them by a learned temperature, and appends one
logit produced by a small network. CCAC-T is a CCAC-S model re-fitted on a
few samples of a new distribution with everything frozen except the
temperature and the last layer of the auxiliary network.

In every variant the predicted label stays the target classifier's argmax;
only its confidence changes.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Tuple

import numpy as np
from scipy.special import softmax

from auxcalib.calibrator_model import (CalibratorModel, outcome_arrays,
                                       validation_ece)
from auxcalib.dataset import aux_one_hot, predict_batch
from auxcalib.errors import FitError, InvalidInputError, InvalidModelError
from auxcalib.feed_forward_net import (FeedForwardNet, LossConfig, TrainConfig,
                                       ccac_loss_and_logit_gradient,
                                       final_loss, run_adam)
from auxcalib.feed_forward_net import train as train_net
from auxcalib.metrics import DEFAULT_BINS, outcomes_from_arrays
from auxcalib.utils import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_HIDDEN_LAYERS = (50, 20)
# None means (50, K): the re-trained last layer then has K+1 weights.
DEFAULT_AUX_HIDDEN_LAYERS = None
DEFAULT_GRID_VALUES = (0.0, 0.5, 1.0, 2.0)


class ConfidenceRule(Enum):
    """
    How the predicted class probability and the aux probability are merged
    into one confidence.
    """
    GEO_MEAN_COMPLEMENT = "geo_mean_complement"
    GEO_MEAN_PRODUCT = "geo_mean_product"

    @staticmethod
    def parse(value):
        if isinstance(value, ConfidenceRule):
            return value
        try:
            return ConfidenceRule(value)
        except ValueError as e:
            raise InvalidInputError(
                f"Unknown confidence rule '{value}'; expected one of "
                f"{[r.value for r in ConfidenceRule]}.") from e


RULES = tuple(ConfidenceRule)


@dataclass(frozen=True)
class HyperGrid:
    """
    Candidate (lambda1, lambda2) values; every combination is tried.
    """
    lambda1_values: Tuple[float, ...] = DEFAULT_GRID_VALUES
    lambda2_values: Tuple[float, ...] = DEFAULT_GRID_VALUES

    def __post_init__(self):
        if not self.lambda1_values or not self.lambda2_values:
            raise FitError("The hyperparameter grid must not be empty.")
        if any(v < 0 for v in self.lambda1_values + self.lambda2_values):
            raise InvalidInputError("Grid values must be >= 0.")

    @staticmethod
    def single(lambda1, lambda2):
        return HyperGrid((float(lambda1), ), (float(lambda2), ))

    def points(self):
        """(lambda1, lambda2) pairs, lambda1 varying slowest."""
        return list(product(self.lambda1_values, self.lambda2_values))


def combined_confidence(mu, y_hat, rule):
    """
    Scalar confidence of the predicted label from K+1 probabilities.

    Args:
        mu (array-like): K+1 probabilities, the last one for the aux class.
        y_hat (int): Target classifier's predicted label.
        rule (ConfidenceRule): Merging rule.

    Returns:
        float: Confidence in [0, 1].
    """
    mu = np.asarray(mu, dtype=np.float64)
    return float(
        combined_confidences(mu[None, :], np.array([int(y_hat)]), rule)[0])


def combined_confidences(mu, y_hat, rule):
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    k = mu.shape[1] - 1
    y_hat = np.asarray(y_hat, dtype=np.int64)
    if np.any((y_hat < 0) | (y_hat >= k)):
        raise InvalidInputError(f"Predicted labels must lie in [0, {k}).")
    mu_hat = np.clip(mu[np.arange(mu.shape[0]), y_hat], 0.0, 1.0)
    mu_aux = np.clip(mu[:, k], 0.0, 1.0)
    rule = ConfidenceRule.parse(rule)
    if rule is ConfidenceRule.GEO_MEAN_COMPLEMENT:
        confidence = 1.0 - np.sqrt((1.0 - mu_hat) * mu_aux)
    else:
        confidence = np.sqrt(mu_hat * (1.0 - mu_aux))
    return np.clip(confidence, 0.0, 1.0)


class AuxClassModel(CalibratorModel):
    """
    Shared part of the auxiliary-class calibrators: K+1 probabilities turned
    into a confidence of the target classifier's label by a rule.
    """

    def __init__(self, k, loss_cfg, rule, selection=None):
        super().__init__(k, selection)
        self.loss_cfg = loss_cfg
        self.rule = ConfidenceRule.parse(rule)

    def probs(self, logits):
        raise NotImplementedError

    def confidences(self, logits):
        logits = self.check_logits(logits)
        if logits.shape[0] == 0:
            return np.zeros(0)
        y_hat, _ = predict_batch(logits)
        return combined_confidences(self.probs(logits), y_hat, self.rule)


class CcacModel(AuxClassModel):
    """
    Network from the K logits to K+1 logits.

    Attributes:
        net (FeedForwardNet): K inputs, K+1 outputs.
    """

    kind = "ccac"

    def __init__(self, k, net, loss_cfg, rule, selection=None):
        super().__init__(k, loss_cfg, rule, selection)
        if net.input_dim != self.k or net.output_dim != self.k + 1:
            raise InvalidModelError(
                f"CCAC network must map {self.k} inputs to {self.k + 1} "
                f"outputs, got {net.input_dim} -> {net.output_dim}.")
        self.net = net

    def probs(self, logits):
        logits = self.check_logits(logits)
        return softmax(self.net.forward(logits), axis=1)

    def parameters_dict(self):
        return {
            "net": self.net.to_dict(self.loss_cfg),
            "rule": self.rule.value,
        }

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        net_dict = parameters["net"]
        return cls(k, FeedForwardNet.from_dict(net_dict),
                   LossConfig.from_dict(net_dict["lossConfig"]),
                   parameters["rule"], selection)


def ccac_probs(m, z):
    """K+1 probabilities softmax(net(z)) of one logit vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != m.k:
        raise InvalidInputError(
            f"Expected a logit vector of length {m.k}, got shape {z.shape}.")
    return m.probs(z[None, :])[0]


class CcacSModel(AuxClassModel):
    """
    Temperature-scaled K logits plus one auxiliary logit from a network.

    Training updates tau = ln T so that T stays positive.

    Attributes:
        temperature (float): T > 0.
        aux_net (FeedForwardNet): K inputs, 1 output.
        fixed_aux_logit (float or None): If set, the aux logit is pinned to
            this value and aux_net is unused.
    """

    kind = "ccac-s"

    def __init__(self,
                 k,
                 temperature,
                 aux_net,
                 loss_cfg,
                 rule,
                 fixed_aux_logit=None,
                 selection=None):
        super().__init__(k, loss_cfg, rule, selection)
        if not (temperature > 0 and np.isfinite(temperature)):
            raise InvalidModelError(
                f"Temperature must be a positive number, got {temperature}.")
        if aux_net.input_dim != self.k or aux_net.output_dim != 1:
            raise InvalidModelError(
                f"Aux network must map {self.k} inputs to 1 output, got "
                f"{aux_net.input_dim} -> {aux_net.output_dim}.")
        self.temperature = float(temperature)
        self.aux_net = aux_net
        self.fixed_aux_logit = (None if fixed_aux_logit is None else
                                float(fixed_aux_logit))

    @property
    def tau(self):
        return float(np.log(self.temperature))

    @property
    def parameter_count(self):
        return self.aux_net.parameter_count + 1

    def aux_logits(self, logits):
        if self.fixed_aux_logit is not None:
            return np.full(logits.shape[0], self.fixed_aux_logit)
        return self.aux_net.forward(logits)[:, 0]

    def merged_logits(self, logits):
        logits = self.check_logits(logits)
        return np.column_stack(
            [logits / self.temperature,
             self.aux_logits(logits)])

    def probs(self, logits):
        return softmax(self.merged_logits(logits), axis=1)

    def parameters_dict(self):
        return {
            "temperature": self.temperature,
            "auxNet": self.aux_net.to_dict(self.loss_cfg),
            "rule": self.rule.value,
            "fixedAuxLogit": self.fixed_aux_logit,
        }

    @classmethod
    def from_parameters(cls, k, parameters, selection=None):
        net_dict = parameters["auxNet"]
        return cls(k,
                   parameters["temperature"],
                   FeedForwardNet.from_dict(net_dict),
                   LossConfig.from_dict(net_dict["lossConfig"]),
                   parameters["rule"],
                   fixed_aux_logit=parameters.get("fixedAuxLogit"),
                   selection=selection)

    def __repr__(self):
        return (f"{type(self).__name__}(k={self.k}, "
                f"temperature={self.temperature:.4f}, rule={self.rule.value})")


class CcacTModel(CcacSModel):
    """
    A CCAC-S model transferred to a new distribution.
    """

    kind = "ccac-t"


def ccacs_probs(m, z):
    """K+1 probabilities softmax([z / T, aux(z)]) of one logit vector."""
    if not m.temperature > 0:
        raise InvalidModelError(f"Temperature must be > 0, got {m.temperature}.")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != m.k:
        raise InvalidInputError(
            f"Expected a logit vector of length {m.k}, got shape {z.shape}.")
    return m.probs(z[None, :])[0]


def _check_fit_inputs(train, val):
    if len(train) == 0:
        raise FitError("Cannot fit a calibrator on an empty training set.")
    if len(val) == 0:
        raise FitError("Model selection needs validation samples.")
    if train.k != val.k:
        raise InvalidInputError(
            f"Train K={train.k} and validation K={val.k} differ.")


def _rules(rules):
    rules = RULES if rules is None else tuple(
        ConfidenceRule.parse(r) for r in rules)
    if not rules:
        raise FitError("At least one confidence rule is required.")
    return rules


def _select_rule(model, val, rules, n_bins, candidates, point=None):
    """
    Scores each rule of a trained model on val and returns the best
    (model, rule, ece); earlier rules win ties.
    """
    best = None
    for rule in rules:
        model.rule = rule
        val_ece = validation_ece(model, val, n_bins)
        row = {"rule": rule.value, "validationEce": val_ece}
        if point is not None:
            row.update({"lambda1": point[0], "lambda2": point[1]})
        candidates.append(row)
        if best is None or val_ece < best[1]:
            best = (rule, val_ece)
    model.rule = best[0]
    return best


def _grid_search(fit_point, train, val, grid, rules, n_bins, kind):
    _check_fit_inputs(train, val)
    rules = _rules(rules)
    best, candidates = None, []
    for i, (lambda1, lambda2) in enumerate(grid.points()):
        loss_cfg = LossConfig(lambda1=lambda1, lambda2=lambda2)
        model = fit_point(loss_cfg, i)
        rule, val_ece = _select_rule(model, val, rules, n_bins, candidates,
                                     (lambda1, lambda2))
        logger.info("%s lambda1=%g lambda2=%g: rule %s, validation ECE %.4f",
                    kind, lambda1, lambda2, rule.value, val_ece)
        if best is None or val_ece < best[1]:
            best = (model, val_ece)
    model, val_ece = best
    model.selection = {
        "lambda1": model.loss_cfg.lambda1,
        "lambda2": model.loss_cfg.lambda2,
        "rule": model.rule.value,
        "validationEce": val_ece,
        "candidates": candidates,
    }
    return model


def fit_ccac(train,
             val,
             grid=HyperGrid(),
             hidden_layers=DEFAULT_HIDDEN_LAYERS,
             train_cfg=TrainConfig(),
             rules=None,
             n_bins=DEFAULT_BINS):
    """
    Fits CCAC for every grid point and keeps the (network, rule) pair with
    minimal validation ECE.

    Each grid cell draws its initialization and shuffles from its own seed
    derived from train_cfg.seed, so cells are independent of each other.

    Args:
        train, val (CalibrationDataset): Fitting and selection data.
        grid (HyperGrid): Loss weights to try.
        hidden_layers (tuple): Widths of the hidden layers.
        train_cfg (TrainConfig): Optimization settings.
        rules (list or None): Confidence rules to try (all when None).
        n_bins (int): Bins of the selection ECE.

    Returns:
        CcacModel: The selected model.
    """
    k = train.k
    x = np.asarray(train.logits)
    w = aux_one_hot(train)
    layer_sizes = [k] + list(hidden_layers) + [k + 1]
    logger.info("Fitting ccac %s on %d samples (%d aux)...", layer_sizes,
                len(train), int(w[:, k].sum()) if len(train) else 0)

    def fit_point(loss_cfg, index):
        seed = derive_seed(train_cfg.seed, f"ccac/{index}")
        net = FeedForwardNet.initialize(layer_sizes, seed)
        net, trace = train_net(net, (x, w), loss_cfg, train_cfg.epochs,
                           train_cfg.batch_size, train_cfg.learning_rate,
                           seed)
        logger.debug("ccac cell %d final loss %.6f", index,
                     final_loss(trace))
        return CcacModel(k, net, loss_cfg, RULES[0])

    return _grid_search(fit_point, train, val, grid, rules, n_bins, "ccac")


def _ccacs_loss_and_grad(x, w, loss_cfg, aux_net, fixed_aux_logit):
    """
    Batch loss of a CCAC-S model and its gradient for [tau, aux params...].
    """

    def loss_and_grad(params, indices):
        tau = params[0][0]
        xb = x[indices]
        temperature = np.exp(tau)
        if fixed_aux_logit is None:
            net = aux_net.with_parameters(params[1:])
            aux, cache = net.forward_with_cache(xb)
        else:
            aux = np.full((len(indices), 1), fixed_aux_logit)
        logits = np.column_stack([xb / temperature, aux])
        loss, d_logits = ccac_loss_and_logit_gradient(logits, w[indices],
                                                      loss_cfg)
        k = x.shape[1]
        # d(z / e^tau) / d tau = -z / T
        d_tau = np.sum(d_logits[:, :k] * (-xb / temperature))
        if fixed_aux_logit is None:
            aux_grads = net.backward_from_output(cache, d_logits[:, k:])
        else:
            aux_grads = [np.zeros_like(p) for p in params[1:]]
        return loss, [np.array([d_tau])] + aux_grads

    return loss_and_grad


def _train_ccacs(model, x, w, train_cfg, trainable=None):
    params = [np.array([model.tau])] + model.aux_net.parameters()
    if model.fixed_aux_logit is not None:
        trainable = [True] + [False] * (len(params) - 1)
    loss_and_grad = _ccacs_loss_and_grad(x, w, model.loss_cfg, model.aux_net,
                                         model.fixed_aux_logit)
    params, trace = run_adam(params, loss_and_grad, x.shape[0], train_cfg,
                             trainable)
    return float(params[0][0]), model.aux_net.with_parameters(
        params[1:]), trace


def fit_ccacs(train,
              val,
              grid=HyperGrid(),
              aux_hidden_layers=DEFAULT_AUX_HIDDEN_LAYERS,
              train_cfg=TrainConfig(),
              rules=None,
              fixed_aux_logit=None,
              n_bins=DEFAULT_BINS):
    """
    Fits CCAC-S like fit_ccac; the temperature starts at 1 and is trained
    jointly with the auxiliary network.

    Args:
        aux_hidden_layers (tuple): Hidden widths of the aux network. The last
            one is the width seen by the layer that transfer re-trains.
        fixed_aux_logit (float or None): Pins the aux logit, leaving only the
            temperature to train.

    Returns:
        CcacSModel: The selected model.
    """
    k = train.k
    if aux_hidden_layers is None:
        aux_hidden_layers = (DEFAULT_HIDDEN_LAYERS[0], k)
    x = np.asarray(train.logits)
    w = aux_one_hot(train)
    layer_sizes = [k] + list(aux_hidden_layers) + [1]
    logger.info("Fitting ccac-s %s on %d samples...", layer_sizes, len(train))

    def fit_point(loss_cfg, index):
        seed = derive_seed(train_cfg.seed, f"ccac-s/{index}")
        start = CcacSModel(k, 1.0, FeedForwardNet.initialize(layer_sizes,
                                                             seed), loss_cfg,
                           RULES[0], fixed_aux_logit)
        tau, aux_net, trace = _train_ccacs(start, x, w,
                                           train_cfg.with_seed(seed))
        logger.debug("ccac-s cell %d final loss %.6f, T=%.4f", index,
                     final_loss(trace), np.exp(tau))
        return CcacSModel(k, np.exp(tau), aux_net, loss_cfg, RULES[0],
                          fixed_aux_logit)

    return _grid_search(fit_point, train, val, grid, rules, n_bins, "ccac-s")


def transfer_mask(model):
    """
    Which of [tau, W0, b0, ..., W_last, b_last] transfer re-trains: tau and
    the aux network's last layer.
    """
    n_arrays = 2 * len(model.aux_net.layers)
    return [True] + [i >= n_arrays - 2 for i in range(n_arrays)]


def transfer_ccacs(pretrained,
                   small_train,
                   small_val,
                   train_cfg=TrainConfig(),
                   rules=None,
                   n_bins=DEFAULT_BINS):
    """
    Adapts a CCAC-S model to a new distribution from a few labeled samples.

    Only the temperature and the last layer of the aux network are trained,
    starting from the pretrained values; with a penultimate width of K that
    is K+2 scalars. The loss weights are kept and the confidence rule is
    re-selected on small_val.

    Returns:
        CcacTModel: The transferred model.

    Raises:
        InvalidModelError: If pretrained is not a CCAC-S model or K differs.
    """
    if getattr(pretrained, "kind", None) != CcacSModel.kind:
        raise InvalidModelError(
            f"transfer requires a CCAC-S model, got "
            f"{getattr(pretrained, 'kind', type(pretrained).__name__)}.")
    for ds in (small_train, small_val):
        if ds.k != pretrained.k:
            raise InvalidModelError(
                f"Pretrained model has K={pretrained.k} but the transfer "
                f"data has K={ds.k}.")
    _check_fit_inputs(small_train, small_val)
    rules = _rules(rules)
    mask = transfer_mask(pretrained)
    last_weights, last_bias = pretrained.aux_net.layers[-1]
    trainable_count = 1
    if pretrained.fixed_aux_logit is None:
        trainable_count += last_weights.size + last_bias.size
    logger.info("Transferring ccac-s on %d samples (%d trainable scalars)...",
                len(small_train), trainable_count)
    x = np.asarray(small_train.logits)
    w = aux_one_hot(small_train)
    tau, aux_net, trace = _train_ccacs(pretrained, x, w, train_cfg, mask)
    logger.debug("transfer final loss %.6f, T=%.4f", final_loss(trace),
                 np.exp(tau))
    model = CcacTModel(pretrained.k, np.exp(tau), aux_net, pretrained.loss_cfg,
                       RULES[0], pretrained.fixed_aux_logit)
    candidates = []
    rule, val_ece = _select_rule(model, small_val, rules, n_bins, candidates)
    n_layers = len(aux_net.layers)
    model.selection = {
        "lambda1": pretrained.loss_cfg.lambda1,
        "lambda2": pretrained.loss_cfg.lambda2,
        "sourceKind": pretrained.kind,
        "rule": rule.value,
        "validationEce": val_ece,
        "candidates": candidates,
        "trainableParameters": trainable_count,
        "frozenParameters": [
            f"auxNet.layers[{i}]" for i in range(n_layers - 1)
        ],
        "transferTrainSamples": len(small_train),
        "transferValSamples": len(small_val),
    }
    return model


def calibrated_confidences(model, ds):
    """
    One EvalOutcome per record, in order: the model's confidence of the
    target classifier's prediction and whether that prediction is correct.
    """
    return outcomes_from_arrays(*outcome_arrays(model, ds))
