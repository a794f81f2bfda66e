"""JSON model files.

Arrays are stored as nested lists of Python floats, which ``json`` writes
with ``repr`` precision, so a save/load round trip is bit exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..features import NormStats
from .bnn import BayesLayer, BnnModel
from .mlp import BatchNorm, DenseLayer, MlpModel, RbfLayer

FORMAT_VERSION = 1


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def _layer_to_dict(layer):
    if isinstance(layer, RbfLayer):
        return {"type": "rbf", "centers": _arr(layer.centers), "widths": _arr(layer.widths),
                "dims": list(layer.centers.shape[::-1])}
    d = {"type": "dense", "dims": [layer.fan_in, layer.fan_out], "activation": layer.activation,
         "weights": _arr(layer.weights), "biases": _arr(layer.biases), "dropout": layer.dropout,
         "batch_norm": None}
    if layer.batch_norm is not None:
        bn = layer.batch_norm
        d["batch_norm"] = {"gamma": _arr(bn.gamma), "beta": _arr(bn.beta), "running_mean": _arr(bn.running_mean),
                           "running_var": _arr(bn.running_var), "momentum": bn.momentum}
    return d


def _layer_from_dict(d):
    if d["type"] == "rbf":
        return RbfLayer(np.array(d["centers"], dtype=float).reshape(d["dims"][1], d["dims"][0]),
                        np.array(d["widths"], dtype=float))
    bn = d.get("batch_norm")
    fan_in, fan_out = d["dims"]
    return DenseLayer(np.array(d["weights"], dtype=float).reshape(fan_in, fan_out), d["biases"], d["activation"],
                      None if bn is None else BatchNorm(*(np.array(bn[k], dtype=float) for k in
                                                          ("gamma", "beta", "running_mean", "running_var")),
                                                        momentum=bn["momentum"]),
                      d.get("dropout", 0.0))


def model_to_dict(model) -> dict:
    if isinstance(model, MlpModel):
        return {"format": "nndoa-model", "version": FORMAT_VERSION, "kind": "mlp",
                "label_scale": model.label_scale, "input_normalization": model.input_stats.to_dict(),
                "layers": [_layer_to_dict(l) for l in model.layers]}
    if isinstance(model, BnnModel):
        return {"format": "nndoa-model", "version": FORMAT_VERSION, "kind": "bnn",
                "label_scale": model.label_scale, "likelihood_std": model.likelihood_std,
                "input_normalization": model.input_stats.to_dict(),
                "layers": [{"dims": [l.fan_in, l.fan_out], "activation": l.activation, "mu_w": _arr(l.mu_w),
                            "rho_w": _arr(l.rho_w), "mu_b": _arr(l.mu_b), "rho_b": _arr(l.rho_b)}
                           for l in model.layers]}
    if hasattr(model, "to_dict"):
        return model.to_dict()
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    if d.get("format") != "nndoa-model" or d.get("version") != FORMAT_VERSION:
        raise ConfigurationError("not a supported model file")
    kind = d["kind"]
    stats = NormStats.from_dict(d["input_normalization"]) if "input_normalization" in d else None
    if kind == "mlp":
        return MlpModel([_layer_from_dict(l) for l in d["layers"]], stats, d["label_scale"])
    if kind == "bnn":
        layers = []
        for l in d["layers"]:
            shape = tuple(l["dims"])
            layers.append(BayesLayer(np.array(l["mu_w"], dtype=float).reshape(shape),
                                     np.array(l["rho_w"], dtype=float).reshape(shape),
                                     np.array(l["mu_b"], dtype=float), np.array(l["rho_b"], dtype=float),
                                     l["activation"]))
        return BnnModel(layers, stats, d["label_scale"], d["likelihood_std"])
    if kind == "scheme":
        from ..schemes import Scheme
        return Scheme.from_dict(d)
    raise ConfigurationError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
