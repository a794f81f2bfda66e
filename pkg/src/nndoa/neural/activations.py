"""Element-wise activation functions and their derivatives."""
from __future__ import annotations

import numpy as np

LEAKY_SLOPE = 0.01
ACTIVATIONS = ("relu", "sigmoid", "tanh", "leaky_relu", "linear", "rbf")


def activation_apply(kind: str, x, center=0.0, width=1.0):
    """Apply activation ``kind`` to ``x``.

    ``rbf`` is ``exp(-(width * (x - center))**2)``; ``center`` and ``width``
    are ignored by every other kind.
    """
    x = np.asarray(x, dtype=float)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "leaky_relu":
        return np.maximum(LEAKY_SLOPE * x, x)
    if kind == "sigmoid":
        # split by sign to avoid overflow in exp
        e = np.exp(-np.abs(x))
        return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "linear":
        return x
    if kind == "rbf":
        return np.exp(-(width * (x - center)) ** 2)
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind: str, x, y):
    """Derivative w.r.t. the pre-activation ``x``, given ``y = f(x)``."""
    if kind == "relu":
        return (x > 0).astype(float)
    if kind == "leaky_relu":
        return np.where(x > 0, 1.0, LEAKY_SLOPE)
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    if kind == "linear":
        return np.ones_like(x)
    if kind == "rbf":
        return -2.0 * x * y
    raise ValueError(f"unknown activation {kind!r}")
