"""
A small dense feed-forward network with a hand-written backward pass for the
auxiliary-class cross-entropy, and the Adam optimizer used to train it.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np
from scipy.special import softmax

from auxcalib.errors import FitError, InvalidInputError, InvalidModelError

logger = logging.getLogger(__name__)

NET_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LossConfig:
    """
    Weights of the auxiliary-class loss.

    Attributes:
        lambda1 (float): Weight pushing correct samples away from the aux class.
        lambda2 (float): Weight of the aux class log-likelihood.
        eps_log (float): Clamp applied to probabilities before logarithms.
    """
    lambda1: float = 1.0
    lambda2: float = 1.0
    eps_log: float = 1e-12

    def __post_init__(self):
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise InvalidInputError(
                f"lambda1 and lambda2 must be >= 0, got {self.lambda1}, "
                f"{self.lambda2}.")

    def to_dict(self):
        return {
            "lambda1": float(self.lambda1),
            "lambda2": float(self.lambda2),
            "epsLog": float(self.eps_log),
        }

    @staticmethod
    def from_dict(data):
        return LossConfig(lambda1=data["lambda1"],
                          lambda2=data["lambda2"],
                          eps_log=data.get("epsLog", 1e-12))


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization settings shared by every gradient-trained calibrator.
    """
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 0 or int(self.batch_size) < 1:
            raise InvalidInputError(
                f"Need epochs >= 0 and batch size >= 1, got {self.epochs}, "
                f"{self.batch_size}.")
        if not self.learning_rate > 0:
            raise InvalidInputError(
                f"Learning rate must be > 0, got {self.learning_rate}.")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


class FeedForwardNet:
    """
    Dense network with ReLU hidden layers and raw (linear) outputs.

    Attributes:
        layers (list): (weights (out, in), bias (out,)) pairs, input to output.
    """

    def __init__(self, layers):
        if not layers:
            raise InvalidModelError("A network needs at least one layer.")
        checked = []
        for i, (weights, bias) in enumerate(layers):
            weights = np.array(weights, dtype=np.float64)
            bias = np.array(bias, dtype=np.float64).reshape(-1)
            if weights.ndim != 2 or weights.shape[0] != bias.shape[0]:
                raise InvalidModelError(
                    f"Layer {i}: weights {weights.shape} and bias "
                    f"{bias.shape} do not match.")
            if checked and checked[-1][0].shape[0] != weights.shape[1]:
                raise InvalidModelError(
                    f"Layer {i} expects {weights.shape[1]} inputs but the "
                    f"previous layer has {checked[-1][0].shape[0]} outputs.")
            if not (np.all(np.isfinite(weights))
                    and np.all(np.isfinite(bias))):
                raise InvalidModelError(f"Layer {i} has non-finite parameters.")
            checked.append((weights, bias))
        self.layers = checked

    @staticmethod
    def initialize(layer_sizes, seed=0):
        """
        Creates a network with Glorot-uniform weights and zero biases.

        Args:
            layer_sizes (list): [input, hidden..., output] widths.
            seed (int): Seed of the initialization.
        """
        if len(layer_sizes) < 2:
            raise InvalidModelError(
                f"Need input and output sizes, got {layer_sizes}.")
        rng = np.random.default_rng(int(seed))
        layers = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append((rng.uniform(-limit, limit, size=(fan_out, fan_in)),
                           np.zeros(fan_out)))
        return FeedForwardNet(layers)

    @staticmethod
    def zeros(layer_sizes):
        return FeedForwardNet([
            (np.zeros((fan_out, fan_in)), np.zeros(fan_out))
            for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:])
        ])

    @property
    def layer_sizes(self):
        return [self.layers[0][0].shape[1]] + [w.shape[0] for w, _ in self.layers]

    @property
    def input_dim(self):
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self):
        return self.layers[-1][0].shape[0]

    @property
    def parameter_count(self):
        return sum(w.size + b.size for w, b in self.layers)

    def parameters(self):
        """Flat list [W0, b0, W1, b1, ...] of parameter copies."""
        params = []
        for weights, bias in self.layers:
            params.extend([weights.copy(), bias.copy()])
        return params

    def with_parameters(self, params):
        """New network of the same shape holding the given flat parameters."""
        if len(params) != 2 * len(self.layers):
            raise InvalidModelError(
                f"Expected {2 * len(self.layers)} arrays, got {len(params)}.")
        return FeedForwardNet([(params[2 * i], params[2 * i + 1])
                               for i in range(len(self.layers))])

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim or x.ndim not in (1, 2):
            raise InvalidInputError(
                f"Network expects inputs of size {self.input_dim}, got shape "
                f"{x.shape}.")
        return x

    def forward(self, x):
        """
        Raw output logits for one input vector or an (N, in) batch.
        """
        out, _ = self.forward_with_cache(x)
        return out

    def forward_with_cache(self, x):
        """
        Forward pass that also returns what backward() needs: the input and
        pre-activation of each layer.
        """
        x = self._check_input(x)
        activation = np.atleast_2d(x)
        cache = []
        for i, (weights, bias) in enumerate(self.layers):
            pre_activation = activation @ weights.T + bias
            cache.append((activation, pre_activation))
            if i < len(self.layers) - 1:
                activation = np.maximum(pre_activation, 0.0)
            else:
                activation = pre_activation
        out = activation[0] if x.ndim == 1 else activation
        return out, cache

    def backward_from_output(self, cache, d_output):
        """
        Back-propagates d(loss)/d(output) of a batch to every parameter.

        Returns:
            list: Gradients aligned with parameters().
        """
        grads = [None] * (2 * len(self.layers))
        delta = np.atleast_2d(d_output)
        for i in range(len(self.layers) - 1, -1, -1):
            activation, _ = cache[i]
            grads[2 * i] = delta.T @ activation
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.layers[i][0]) * (cache[i - 1][1] > 0)
        return grads

    def to_dict(self, loss_cfg=None):
        data = {
            "formatVersion": NET_FORMAT_VERSION,
            "layerSizes": self.layer_sizes,
            "hiddenActivation": "relu",
            "layers": [{
                "weights": weights.tolist(),
                "bias": bias.tolist()
            } for weights, bias in self.layers],
        }
        if loss_cfg is not None:
            data["lossConfig"] = loss_cfg.to_dict()
        return data

    @staticmethod
    def from_dict(data):
        if data.get("formatVersion") != NET_FORMAT_VERSION:
            raise InvalidModelError(
                f"Unsupported network format {data.get('formatVersion')}.")
        net = FeedForwardNet([(layer["weights"], layer["bias"])
                              for layer in data["layers"]])
        if net.layer_sizes != list(data["layerSizes"]):
            raise InvalidModelError(
                f"Layer sizes {data['layerSizes']} do not match the weights "
                f"{net.layer_sizes}.")
        return net

    def __repr__(self):
        return f"FeedForwardNet(layer_sizes={self.layer_sizes})"


def forward(net, x):
    return net.forward(x)


def _clamp(values, eps):
    return np.clip(values, eps, 1.0 - eps)


def ccac_loss(mu, w, cfg):
    """
    Auxiliary-class cross-entropy of one sample (or the mean over a batch).

    L = -sum_{k<K} w_k ln mu_k - lambda1 (1 - w_K) ln(1 - mu_K)
        - lambda2 w_K ln mu_K, with the last index K being the aux class.

    Args:
        mu (array-like): K+1 calibrated probabilities (or (N, K+1)).
        w (array-like): One-hot (K+1)-class labels of the same shape.
        cfg (LossConfig): Loss weights.

    Returns:
        float: The loss.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    return float(np.mean(_per_sample_loss(mu, w, cfg)))


def _per_sample_loss(mu, w, cfg):
    eps = cfg.eps_log
    k = mu.shape[1] - 1
    clamped = _clamp(mu, eps)
    # 1 - mu_K summed from the K class probabilities keeps precision near 1.
    not_aux = _clamp(mu[:, :k].sum(axis=1), eps)
    class_term = -np.sum(w[:, :k] * np.log(clamped[:, :k]), axis=1)
    keep_term = -cfg.lambda1 * (1.0 - w[:, k]) * np.log(not_aux)
    aux_term = -cfg.lambda2 * w[:, k] * np.log(clamped[:, k])
    return class_term + keep_term + aux_term


def ccac_loss_and_logit_gradient(logits, w, cfg):
    """
    Mean batch loss of softmax(logits) and its gradient w.r.t. the logits.

    Gradients of clamped probabilities are zero, consistent with the loss.

    Returns:
        tuple: (mean loss, (N, K+1) gradient already divided by N).
    """
    logits = np.atleast_2d(logits)
    w = np.atleast_2d(w)
    n, k_plus = logits.shape
    k = k_plus - 1
    eps = cfg.eps_log
    mu = softmax(logits, axis=1)
    loss = float(np.mean(_per_sample_loss(mu, w, cfg)))

    coef = w.copy()
    coef[:, k] *= cfg.lambda2
    coef = coef * ((mu > eps) & (mu < 1.0 - eps))
    grad = mu * coef.sum(axis=1, keepdims=True) - coef

    q = mu[:, k]
    not_aux = mu[:, :k].sum(axis=1)
    keep_coef = cfg.lambda1 * (1.0 - w[:, k]) * ((not_aux > eps) &
                                                 (not_aux < 1.0 - eps))
    scale = keep_coef * q / _clamp(not_aux, eps)
    indicator = np.zeros_like(mu)
    indicator[:, k] = 1.0
    grad += scale[:, None] * (indicator - mu)
    return loss, grad / n


def loss_and_gradients(net, x, w, cfg):
    """
    Mean loss of a batch and its gradients for every network parameter.
    """
    logits, cache = net.forward_with_cache(x)
    loss, d_logits = ccac_loss_and_logit_gradient(logits, w, cfg)
    return loss, net.backward_from_output(cache, d_logits)


def backward(net, x, w, cfg):
    """
    Mean-over-batch gradients of the auxiliary-class loss, aligned with
    net.parameters().

    Args:
        net (FeedForwardNet): Network mapping K inputs to K+1 logits.
        x (array-like): (N, K) inputs.
        w (array-like): (N, K+1) one-hot labels.
        cfg (LossConfig): Loss weights.
    """
    if np.asarray(x).shape[0] == 0:
        raise InvalidInputError("backward needs a non-empty batch.")
    return loss_and_gradients(net, x, w, cfg)[1]


@dataclass
class AdamState:
    """
    Moments and step counter of the Adam optimizer.
    """
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @staticmethod
    def for_parameters(params, learning_rate=1e-3):
        return AdamState(learning_rate=learning_rate,
                         m=[np.zeros_like(p) for p in params],
                         v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state):
    """
    One bias-corrected Adam update.

    Returns:
        tuple: (new parameter list, new AdamState); inputs are left untouched.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidInputError(
            "Parameters, gradients and optimizer state do not match.")
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise InvalidInputError(
                f"Gradient shape {g.shape} does not match parameter {p.shape}.")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        new_params.append(p - state.learning_rate * m_hat /
                          (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, replace(state, t=t, m=new_m, v=new_v)


def run_adam(params, loss_and_grad, n_samples, train_cfg, trainable=None):
    """
    Mini-batch Adam loop with a seeded shuffle per epoch.

    Args:
        params (list): Initial parameter arrays.
        loss_and_grad (callable): (params, batch indices) -> (loss, grads).
        n_samples (int): Number of training samples.
        train_cfg (TrainConfig): Epochs, batch size, learning rate and seed.
        trainable (list or None): One bool per parameter array; frozen arrays
            are returned bit-identical.

    Returns:
        tuple: (trained parameters, per-epoch mean loss list).
    """
    if n_samples <= 0:
        raise FitError("Cannot train on an empty dataset.")
    if trainable is None:
        trainable = [True] * len(params)
    rng = np.random.default_rng(int(train_cfg.seed))
    state = AdamState.for_parameters(params, train_cfg.learning_rate)
    batch_size = max(1, int(train_cfg.batch_size))
    trace = []
    for epoch in range(int(train_cfg.epochs)):
        order = rng.permutation(n_samples)
        total = 0.0
        for batch, start in enumerate(range(0, n_samples, batch_size)):
            indices = order[start:start + batch_size]
            loss, grads = loss_and_grad(params, indices)
            if not np.isfinite(loss) or not all(
                    np.all(np.isfinite(g)) for g in grads):
                raise FitError(
                    f"Training diverged: non-finite loss {loss} at epoch "
                    f"{epoch}, batch {batch}.")
            total += loss * len(indices)
            grads = [
                g if keep else np.zeros_like(g)
                for g, keep in zip(grads, trainable)
            ]
            updated, state = adam_step(params, grads, state)
            params = [
                new if keep else old
                for new, old, keep in zip(updated, params, trainable)
            ]
        trace.append(total / n_samples)
        if epoch % max(1, int(train_cfg.epochs) // 10) == 0:
            logger.debug("epoch %d/%d mean loss %.6f", epoch + 1,
                         train_cfg.epochs, trace[-1])
    return params, trace


def final_loss(trace):
    return trace[-1] if trace else float("nan")


def train(net, data, loss_cfg, epochs=100, batch_size=256, lr=1e-3, seed=0):
    """
    Trains a network on the auxiliary-class loss.

    Args:
        net (FeedForwardNet): Initial network (left unchanged).
        data: (x, w) arrays of shapes (N, in) and (N, out), or a list of
            (x, w) pairs.
        loss_cfg (LossConfig): Loss weights.
        epochs, batch_size, lr, seed: Optimization settings.

    Returns:
        tuple: (trained network, per-epoch mean loss list).
    """
    x, w = _as_arrays(data)
    if x.shape[0] == 0:
        raise FitError("Cannot train on an empty dataset.")
    train_cfg = TrainConfig(epochs=epochs,
                            batch_size=batch_size,
                            learning_rate=lr,
                            seed=seed)

    def loss_and_grad(params, indices):
        return loss_and_gradients(net.with_parameters(params), x[indices],
                                  w[indices], loss_cfg)

    params, trace = run_adam(net.parameters(), loss_and_grad, x.shape[0],
                             train_cfg)
    return net.with_parameters(params), trace


def _as_arrays(data):
    if isinstance(data, tuple) and len(data) == 2 and isinstance(
            data[0], np.ndarray):
        return np.asarray(data[0], dtype=np.float64), np.asarray(
            data[1], dtype=np.float64)
    pairs = list(data)
    if not pairs:
        return np.zeros((0, 0)), np.zeros((0, 0))
    x = np.array([p[0] for p in pairs], dtype=np.float64)
    w = np.array([p[1] for p in pairs], dtype=np.float64)
    return x, w
