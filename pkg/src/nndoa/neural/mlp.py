"""Feed-forward regression network trained with Adam.

Hidden layers are ``affine -> batch norm -> activation -> dropout``; the
output layer is affine and linear. Targets are angles divided by
``label_scale`` so the regression works on roughly [-1, 1].
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, NumericError, ShapeError
from ..features import Dataset, NormStats, normalize
from .activations import ACTIVATIONS, activation_apply, activation_grad
from .optim import Adam, EarlyStopping, dropout_mask

logger = logging.getLogger(__name__)

BN_EPS = 1e-5


@dataclass
class TrainConfig:
    hidden_sizes: tuple[int, ...] = (25, 25, 25)
    activation: str = "relu"
    batch_size: int = 64
    dropout_rate: float = 0.10
    l2_coeff: float = 0.001
    batch_norm: bool = True
    max_epochs: int = 2000
    patience: int = 20
    learning_rate: float = 1e-3
    validation_fraction: float = 0.10
    kfold_k: int | None = None
    loss: str = "mse"
    optimizer: str = "adam"
    seed: int = 0
    rbf_units: int = 0
    label_scale: float = 90.0

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if not 0 <= self.dropout_rate < 1:
            raise ConfigurationError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.loss != "mse" or self.optimizer != "adam":
            raise ConfigurationError("only loss='mse' with optimizer='adam' is supported")


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9

    @classmethod
    def new(cls, n):
        return cls(np.ones(n), np.zeros(n), np.zeros(n), np.ones(n))


@dataclass
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = "linear"
    batch_norm: BatchNorm | None = None
    dropout: float = 0.0

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.biases = np.atleast_1d(np.asarray(self.biases, dtype=float))
        if self.biases.shape != (self.weights.shape[1],):
            raise ShapeError(f"bias shape {self.biases.shape} does not match weights {self.weights.shape}")

    @property
    def fan_in(self):
        return self.weights.shape[0]

    @property
    def fan_out(self):
        return self.weights.shape[1]

    def parameters(self):
        # the affine bias is redundant in front of batch norm and stays frozen
        params = [self.weights]
        if self.batch_norm is None:
            params.append(self.biases)
        else:
            params += [self.batch_norm.gamma, self.batch_norm.beta]
        return params


@dataclass
class RbfLayer:
    """Fixed Gaussian units ``exp(-(width_u * ||x - center_u||)**2)``."""

    centers: np.ndarray
    widths: np.ndarray

    @property
    def fan_in(self):
        return self.centers.shape[1]

    @property
    def fan_out(self):
        return self.centers.shape[0]

    def parameters(self):
        return []

    def __call__(self, x):
        d2 = (np.sum(x * x, axis=1)[:, None] - 2 * x @ self.centers.T
              + np.sum(self.centers ** 2, axis=1)[None, :])
        return np.exp(-np.maximum(d2, 0.0) * self.widths ** 2)


@dataclass
class MlpModel:
    layers: list
    input_stats: NormStats
    label_scale: float = 90.0

    @property
    def input_dim(self):
        return self.layers[0].fan_in

    @property
    def output_dim(self):
        return self.layers[-1].fan_out

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def copy(self):
        return copy.deepcopy(self)


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0


def init_model(input_dim, output_dim, config: TrainConfig, rng, stats=None, rbf=None) -> MlpModel:
    """He-uniform weights, zero biases, unit batch-norm scale."""
    layers = []
    fan_in = input_dim
    if rbf is not None:
        layers.append(RbfLayer(np.array(rbf.centers, dtype=float), np.array(rbf.widths, dtype=float)))
        fan_in = rbf.centers.shape[0]
    for h in config.hidden_sizes:
        limit = np.sqrt(6.0 / fan_in)
        layers.append(DenseLayer(
            rng.uniform(-limit, limit, (fan_in, h)), np.zeros(h), config.activation,
            BatchNorm.new(h) if config.batch_norm else None, config.dropout_rate))
        fan_in = h
    limit = np.sqrt(6.0 / fan_in)
    layers.append(DenseLayer(rng.uniform(-limit, limit, (fan_in, output_dim)), np.zeros(output_dim)))
    return MlpModel(layers, stats if stats is not None else NormStats.identity(input_dim), config.label_scale)


def _forward(model, x, training=False, rng=None, update_stats=True):
    caches = []
    h = x
    for layer in model.layers:
        if isinstance(layer, RbfLayer):
            h = layer(h)
            caches.append(None)
            continue
        inp = h
        z = inp @ layer.weights
        bn = layer.batch_norm
        bn_cache = None
        if bn is None:
            z = z + layer.biases
            u = z
        elif training:
            # shifted mean keeps a constant batch exactly centred
            mu = z[0] + np.mean(z - z[0], axis=0)
            zc = z - mu
            var = np.mean(zc * zc, axis=0)
            inv = 1.0 / np.sqrt(var + BN_EPS)
            zh = zc * inv
            u = bn.gamma * zh + bn.beta
            bn_cache = (zh, inv)
            if update_stats:
                bn.running_mean = bn.momentum * bn.running_mean + (1 - bn.momentum) * mu
                bn.running_var = bn.momentum * bn.running_var + (1 - bn.momentum) * var
        else:
            u = bn.gamma * (z - bn.running_mean) / np.sqrt(bn.running_var + BN_EPS) + bn.beta
        act = activation_apply(layer.activation, u)
        mask = None
        h = act
        if training and layer.dropout > 0:
            mask = dropout_mask(rng, act.shape, layer.dropout)
            h = act * mask
        caches.append((inp, u, act, bn_cache, mask))
    return h, caches


def _backward(model, caches, dout, l2_coeff):
    grads = []
    g = dout
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        if isinstance(layer, RbfLayer):
            if i != 0:
                raise ConfigurationError("RBF layer is only supported as the first layer")
            continue
        inp, u, a_pre, bn_cache, mask = caches[i]
        if mask is not None:
            g = g * mask
        du = g * activation_grad(layer.activation, u, a_pre)
        if layer.batch_norm is None:
            dz = du
            db = du.sum(axis=0)
            tail = [db]
        else:
            zh, inv = bn_cache
            dgamma = np.sum(du * zh, axis=0)
            dbeta = du.sum(axis=0)
            dzh = du * layer.batch_norm.gamma
            n = du.shape[0]
            dz = inv / n * (n * dzh - dzh.sum(axis=0) - zh * np.sum(dzh * zh, axis=0))
            tail = [dgamma, dbeta]
        dw = inp.T @ dz + 2.0 * l2_coeff * layer.weights
        layer_grads = [dw] + tail
        grads[:0] = layer_grads
        if i > 0:
            g = dz @ layer.weights.T
    return grads


def _l2_penalty(model, l2_coeff):
    return l2_coeff * sum(float(np.sum(l.weights ** 2)) for l in model.layers if isinstance(l, DenseLayer))


def loss_value(model, x, y, l2_coeff=0.0, training=False, rng=None, update_stats=False):
    """MSE on normalized inputs / scaled targets plus the L2 weight penalty."""
    out, _ = _forward(model, x, training, rng, update_stats)
    return float(np.mean((out - y) ** 2)) + _l2_penalty(model, l2_coeff)


def _loss_and_grads(model, x, y, l2_coeff, rng, update_stats=True):
    out, caches = _forward(model, x, True, rng, update_stats)
    diff = out - y
    loss = float(np.mean(diff ** 2)) + _l2_penalty(model, l2_coeff)
    grads = _backward(model, caches, 2.0 * diff / diff.size, l2_coeff)
    return loss, grads


def forward(model, features) -> np.ndarray:
    """Inference-mode prediction in degrees for raw (un-normalized) features."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.input_dim:
        raise ShapeError(f"model expects {model.input_dim} inputs, got {x.shape[1]}")
    out, _ = _forward(model, normalize(x, model.input_stats), training=False)
    out = out * model.label_scale
    return out[0] if single else out


def gradient_check(model, x, y, l2_coeff=0.0, h=1e-5, seed=0, floor=1e-10):
    """Largest relative gap between backprop and central-difference gradients.

    ``x`` is taken as already normalized and ``y`` as already scaled. The
    training-mode forward pass is used with dropout masks drawn from the same
    ``seed`` on every evaluation. The relative gap of a parameter is
    ``|g_bp - g_fd| / max(|g_bp|, |g_fd|, floor)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(len(x), -1)

    def f():
        return loss_value(model, x, y, l2_coeff, True, np.random.default_rng(seed))

    _, grads = _loss_and_grads(model, x, y, l2_coeff, np.random.default_rng(seed), update_stats=False)
    worst = 0.0
    for p, g in zip(model.parameters(), grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            fp = f()
            flat[j] = old - h
            fm = f()
            flat[j] = old
            fd = (fp - fm) / (2 * h)
            dev = abs(gflat[j] - fd) / max(abs(gflat[j]), abs(fd), floor)
            worst = max(worst, dev)
    return worst


def _split_validation(n, fraction, rng):
    n_val = int(round(n * fraction))
    if n_val < 1 or n_val >= n:
        raise ConfigurationError(f"validation split of {fraction} on {n} samples is empty or covers everything")
    perm = rng.permutation(n)
    return perm[n_val:], perm[:n_val]


def train_arrays(x, y, config: TrainConfig, *, val=None, stats=None, rbf=None):
    """Train on raw inputs ``x`` and targets ``y`` (degrees).

    ``val`` is an optional ``(x_val, y_val)`` pair; otherwise
    ``config.validation_fraction`` of the data is held out. Input
    normalization statistics default to those of the fitting split.
    Returns ``(model, history)`` with the best-validation weights restored.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(len(x), -1)
    if len(x) == 0:
        raise ConfigurationError("empty training set")
    rng = np.random.default_rng(config.seed)
    if val is None:
        tr, va = _split_validation(len(x), config.validation_fraction, rng)
        x_tr, y_tr, x_va, y_va = x[tr], y[tr], x[va], y[va]
    else:
        x_tr, y_tr = x, y
        x_va, y_va = np.atleast_2d(val[0]), np.asarray(val[1], dtype=float).reshape(len(val[0]), -1)
        if len(x_va) == 0:
            raise ConfigurationError("empty validation split")
    if stats is None:
        stats = NormStats.fit(x_tr)
    if config.rbf_units and rbf is None:
        from .rbf import fit_rbf_centers
        rbf = fit_rbf_centers(normalize(x_tr, stats), config.rbf_units, config.seed)

    model = init_model(x.shape[1], y.shape[1], config, rng, stats, rbf)
    xn_tr, yn_tr = normalize(x_tr, stats), y_tr / config.label_scale
    xn_va, yn_va = normalize(x_va, stats), y_va / config.label_scale
    if model.layers and isinstance(model.layers[0], RbfLayer):
        # the RBF layer is frozen, so its outputs can be computed once
        rbf_layer = model.layers[0]
        head = MlpModel(model.layers[1:], model.input_stats, model.label_scale)
        xn_tr, xn_va = rbf_layer(xn_tr), rbf_layer(xn_va)
    else:
        rbf_layer, head = None, model

    opt = Adam(head.parameters(), lr=config.learning_rate)
    stopper = EarlyStopping(config.patience)
    hist = History()
    best = head.copy()
    n = len(xn_tr)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = _loss_and_grads(head, xn_tr[idx], yn_tr[idx], config.l2_coeff, rng)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            opt.step(grads)
        tl = loss_value(head, xn_tr, yn_tr)
        vl = loss_value(head, xn_va, yn_va)
        if not (np.isfinite(tl) and np.isfinite(vl)):
            raise NumericError(f"non-finite loss at epoch {epoch} (train {tl}, val {vl})")
        hist.train_loss.append(tl)
        hist.val_loss.append(vl)
        improved, stop = stopper.update(epoch, vl)
        if improved:
            best = head.copy()
        if stop:
            break
    hist.best_epoch, hist.stopped_epoch = stopper.best_epoch, epoch
    logger.debug("training stopped at epoch %d, best epoch %d", epoch, stopper.best_epoch)
    if rbf_layer is not None:
        best = MlpModel([rbf_layer] + best.layers, best.input_stats, best.label_scale)
    return best, hist


def train(dataset: Dataset, config: TrainConfig):
    """Fit an MLP mapping covariance features to sorted angles (degrees)."""
    if len(dataset) == 0:
        raise ConfigurationError("empty dataset")
    return train_arrays(dataset.features, dataset.labels, config)


def kfold_indices(n, k, seed):
    """Validation index sets of ``k`` contiguous folds over a seeded shuffle."""
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds dataset size {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def average_models(models):
    """Element-wise mean of weights, biases and batch-norm statistics."""
    avg = models[0].copy()
    for i, layer in enumerate(avg.layers):
        if isinstance(layer, RbfLayer):
            continue
        group = [m.layers[i] for m in models]
        layer.weights = np.mean([l.weights for l in group], axis=0)
        layer.biases = np.mean([l.biases for l in group], axis=0)
        if layer.batch_norm is not None:
            for name in ("gamma", "beta", "running_mean", "running_var"):
                setattr(layer.batch_norm, name, np.mean([getattr(l.batch_norm, name) for l in group], axis=0))
    return avg


def kfold_train(dataset: Dataset, config: TrainConfig, k: int | None = None):
    """Train ``k`` fold models from one shared initialization and average them.

    Every fold uses ``config.seed`` for initialization, shuffling and dropout,
    and the same input statistics (fit on the whole dataset) so the weight
    sets live in a common parametrization. Returns ``(averaged, fold_models)``.
    """
    k = k or config.kfold_k
    if k is None:
        raise ConfigurationError("kfold_train needs k")
    folds = kfold_indices(len(dataset), k, config.seed)
    stats = NormStats.fit(dataset.features)
    rbf = None
    if config.rbf_units:
        from .rbf import fit_rbf_centers
        rbf = fit_rbf_centers(normalize(dataset.features, stats), config.rbf_units, config.seed)
    models = []
    for i, va in enumerate(folds):
        tr = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model, _ = train_arrays(dataset.features[tr], dataset.labels[tr], config,
                                val=(dataset.features[va], dataset.labels[va]), stats=stats, rbf=rbf)
        models.append(model)
    return average_models(models), models
