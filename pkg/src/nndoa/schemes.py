"""Multi-angle estimation as joint, parallel or serial compositions of MLPs.

joint     one network with K outputs
parallel  K networks, network i regresses the i-th smallest angle
serial    network i sees the features plus angles 1..i-1; trained on the true
          angles, fed its predecessors' predictions at inference
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ShapeError
from .features import Dataset
from .neural.mlp import MlpModel, TrainConfig, forward, train_arrays

KINDS = ("joint", "parallel", "serial")


@dataclass
class SchemeSpec:
    kind: str
    num_angles: int
    train_config: TrainConfig | list[TrainConfig] = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"scheme kind must be one of {KINDS}, got {self.kind!r}")
        if self.num_angles < 1:
            raise ConfigurationError("num_angles must be >= 1")
        if isinstance(self.train_config, list) and len(self.train_config) != self.num_stages:
            raise ConfigurationError(f"{self.kind} scheme needs {self.num_stages} stage configs")

    @property
    def num_stages(self) -> int:
        return 1 if self.kind == "joint" else self.num_angles

    def stage_config(self, i: int) -> TrainConfig:
        """Explicit per-stage config, or the shared one with ``seed + i``."""
        if isinstance(self.train_config, list):
            return self.train_config[i]
        return replace(self.train_config, seed=self.train_config.seed + i)

    def stage_input_dims(self, feature_dim: int) -> list[int]:
        if self.kind == "serial":
            return [feature_dim + i for i in range(self.num_angles)]
        return [feature_dim] * self.num_stages


@dataclass
class Scheme:
    kind: str
    num_angles: int
    stages: list[MlpModel]

    @property
    def feature_dim(self) -> int:
        return self.stages[0].input_dim

    def to_dict(self) -> dict:
        from .neural.io import FORMAT_VERSION, model_to_dict
        return {"format": "nndoa-model", "version": FORMAT_VERSION, "kind": "scheme",
                "scheme": self.kind, "num_angles": self.num_angles,
                "stages": [model_to_dict(m) for m in self.stages]}

    @classmethod
    def from_dict(cls, d: dict) -> "Scheme":
        from .neural.io import model_from_dict
        return cls(d["scheme"], d["num_angles"], [model_from_dict(s) for s in d["stages"]])


def train_scheme(dataset: Dataset, spec: SchemeSpec) -> Scheme:
    """Train every stage of ``spec`` on ``dataset`` (labels sorted ascending)."""
    y = dataset.labels
    if y.shape[1] != spec.num_angles:
        raise ConfigurationError(f"dataset has {y.shape[1]} labels per sample, scheme expects {spec.num_angles}")
    x = dataset.features
    if spec.kind == "joint":
        stages = [train_arrays(x, y, spec.stage_config(0))[0]]
    elif spec.kind == "parallel":
        stages = [train_arrays(x, y[:, [i]], spec.stage_config(i))[0] for i in range(spec.num_angles)]
    else:
        # teacher forcing: stage i sees the true angles of stages < i
        stages = [train_arrays(np.hstack([x, y[:, :i]]), y[:, [i]], spec.stage_config(i))[0]
                  for i in range(spec.num_angles)]
    return Scheme(spec.kind, spec.num_angles, stages)


def predict_scheme(scheme: Scheme, features, forward_fn=forward) -> np.ndarray:
    """Predict ``K`` angles per row (degrees, sorted ascending).

    ``forward_fn(model, inputs)`` evaluates one stage; it is a parameter so
    stage inputs can be traced.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != scheme.feature_dim:
        raise ShapeError(f"scheme expects {scheme.feature_dim} features, got {x.shape[1]}")
    if scheme.kind == "joint":
        out = forward_fn(scheme.stages[0], x)
    elif scheme.kind == "parallel":
        out = np.hstack([forward_fn(m, x) for m in scheme.stages])
    else:
        preds = np.empty((len(x), 0))
        for m in scheme.stages:
            preds = np.hstack([preds, forward_fn(m, np.hstack([x, preds]))])
        out = preds
    return np.sort(out, axis=1)
