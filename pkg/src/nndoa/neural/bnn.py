"""Bayes-by-Backprop regression network.

Every weight and bias has a Gaussian variational posterior
``N(mu, softplus(rho)**2)`` and a standard normal prior. Training maximizes
the ELBO with the reparameterization ``w = mu + softplus(rho) * xi``; the KL
term is computed in closed form. There is no validation split and no early
stopping: training runs for a fixed number of epochs.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, NumericError, ShapeError
from ..features import Dataset, NormStats, normalize
from .activations import activation_apply, activation_grad
from .mlp import History, TrainConfig
from .optim import Adam


def softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gaussian_kl(mu, std):
    """``KL(N(mu, std^2) || N(0, 1))`` summed over all entries."""
    mu, std = np.asarray(mu, dtype=float), np.asarray(std, dtype=float)
    return float(0.5 * np.sum(mu * mu + std * std - 1.0 - 2.0 * np.log(std)))


@dataclass
class BayesLayer:
    mu_w: np.ndarray
    rho_w: np.ndarray
    mu_b: np.ndarray
    rho_b: np.ndarray
    activation: str = "linear"

    @property
    def fan_in(self):
        return self.mu_w.shape[0]

    @property
    def fan_out(self):
        return self.mu_w.shape[1]


@dataclass
class BnnModel:
    layers: list
    input_stats: NormStats
    label_scale: float = 90.0
    likelihood_std: float = 0.02

    @property
    def input_dim(self):
        return self.layers[0].fan_in

    @property
    def output_dim(self):
        return self.layers[-1].fan_out

    def variational_params(self):
        return [p for l in self.layers for p in (l.mu_w, l.rho_w, l.mu_b, l.rho_b)]

    def copy(self):
        return copy.deepcopy(self)


def kl_term(model: BnnModel) -> float:
    """Closed-form KL between the weight posterior and the N(0, I) prior."""
    return sum(gaussian_kl(l.mu_w, softplus(l.rho_w)) + gaussian_kl(l.mu_b, softplus(l.rho_b))
               for l in model.layers)


def init_bnn(input_dim, output_dim, config: TrainConfig, rng, stats=None, init_rho=-5.0,
             likelihood_std=0.02) -> BnnModel:
    layers = []
    fan_in = input_dim
    sizes = list(config.hidden_sizes) + [output_dim]
    for i, h in enumerate(sizes):
        limit = np.sqrt(6.0 / fan_in)
        act = config.activation if i < len(sizes) - 1 else "linear"
        layers.append(BayesLayer(rng.uniform(-limit, limit, (fan_in, h)), np.full((fan_in, h), init_rho),
                                 np.zeros(h), np.full(h, init_rho), act))
        fan_in = h
    return BnnModel(layers, stats if stats is not None else NormStats.identity(input_dim),
                    config.label_scale, likelihood_std)


def _sample_weights(model, rng):
    draws = []
    for l in model.layers:
        xw = rng.standard_normal(l.mu_w.shape)
        xb = rng.standard_normal(l.mu_b.shape)
        draws.append((l.mu_w + softplus(l.rho_w) * xw, l.mu_b + softplus(l.rho_b) * xb, xw, xb))
    return draws


def _net(model, weights, x):
    caches = []
    h = x
    for l, (w, b) in zip(model.layers, weights):
        u = h @ w + b
        a = activation_apply(l.activation, u)
        caches.append((h, u, a))
        h = a
    return h, caches


def _net_backward(model, weights, caches, dout):
    grads = []
    g = dout
    for i in range(len(model.layers) - 1, -1, -1):
        l = model.layers[i]
        h, u, a = caches[i]
        du = g * activation_grad(l.activation, u, a)
        grads.insert(0, (h.T @ du, du.sum(axis=0)))
        g = du @ weights[i][0].T
    return grads


def elbo_loss_and_grads(model: BnnModel, x, y, n_total: int, rng, mc_samples: int = 1):
    """Negative ELBO per data point and its gradient w.r.t. every ``mu``/``rho``.

    ``x`` is normalized and ``y`` scaled. The minibatch likelihood is rescaled
    to the full data set of size ``n_total``, then everything is divided by
    ``n_total``.
    """
    s2 = model.likelihood_std ** 2
    nll = 0.0
    grads = [np.zeros_like(p) for p in model.variational_params()]
    for _ in range(mc_samples):
        draw = _sample_weights(model, rng)
        out, caches = _net(model, [(w, b) for w, b, _, _ in draw], x)
        diff = out - y
        nll += float(np.sum(diff * diff)) / (2 * s2 * len(x)) / mc_samples
        dout = diff / (s2 * len(x)) / mc_samples
        wgrads = _net_backward(model, [(w, b) for w, b, _, _ in draw], caches, dout)
        for i, (l, (gw, gb), (_, _, xw, xb)) in enumerate(zip(model.layers, wgrads, draw)):
            grads[4 * i] += gw
            grads[4 * i + 1] += gw * xw * _sigmoid(l.rho_w)
            grads[4 * i + 2] += gb
            grads[4 * i + 3] += gb * xb * _sigmoid(l.rho_b)
    for i, l in enumerate(model.layers):
        for j, (mu, rho) in enumerate(((l.mu_w, l.rho_w), (l.mu_b, l.rho_b))):
            std = softplus(rho)
            grads[4 * i + 2 * j] += mu / n_total
            grads[4 * i + 2 * j + 1] += (std - 1.0 / std) * _sigmoid(rho) / n_total
    return nll + kl_term(model) / n_total, grads


def train_bnn(dataset: Dataset, config: TrainConfig, mc_samples: int = 1, *, epochs: int | None = None,
              likelihood_std: float = 0.02, init_rho: float = -5.0):
    """Fit a Bayesian MLP by stochastic ELBO maximization.

    Uses every sample for training (no validation split) and runs
    ``epochs`` passes, defaulting to ``config.max_epochs``.
    """
    x = np.asarray(dataset.features, dtype=float)
    y = np.asarray(dataset.labels, dtype=float).reshape(len(x), -1)
    if len(x) == 0:
        raise ConfigurationError("empty training set")
    if mc_samples < 1:
        raise ConfigurationError("mc_samples must be >= 1")
    epochs = config.max_epochs if epochs is None else epochs
    rng = np.random.default_rng(config.seed)
    stats = NormStats.fit(x)
    model = init_bnn(x.shape[1], y.shape[1], config, rng, stats, init_rho, likelihood_std)
    xn, yn = normalize(x, stats), y / config.label_scale
    opt = Adam(model.variational_params(), lr=config.learning_rate)
    hist = History()
    n = len(xn)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = elbo_loss_and_grads(model, xn[idx], yn[idx], n, rng, mc_samples)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite ELBO at epoch {epoch}")
            opt.step(grads)
            total += loss * len(idx)
        hist.train_loss.append(total / n)
    hist.best_epoch = hist.stopped_epoch = epochs
    return model, hist


def predict_bnn(model: BnnModel, features, mc_samples: int = 100, seed: int = 0):
    """Monte-Carlo posterior predictive mean and std, both in degrees."""
    if mc_samples < 1:
        raise ConfigurationError("mc_samples must be >= 1")
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.input_dim:
        raise ShapeError(f"model expects {model.input_dim} inputs, got {x.shape[1]}")
    xn = normalize(x, model.input_stats)
    rng = np.random.default_rng(seed)
    outs = np.stack([_net(model, [(w, b) for w, b, _, _ in _sample_weights(model, rng)], xn)[0]
                     for _ in range(mc_samples)]) * model.label_scale
    mean, std = outs.mean(axis=0), outs.std(axis=0)
    return (mean[0], std[0]) if single else (mean, std)


def forward_mean(model: BnnModel, features):
    """Deterministic network evaluated at the posterior means."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    out, _ = _net(model, [(l.mu_w, l.mu_b) for l in model.layers], normalize(x, model.input_stats))
    return out * model.label_scale
