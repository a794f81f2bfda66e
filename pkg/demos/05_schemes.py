"""
Joint, parallel and serial estimation
=====================================

Three ways to get K angles out of networks: one network with K outputs,
K networks each regressing one sorted angle, or a chain where each stage
also sees the angles estimated before it.
"""
import numpy as np

from nndoa import ArrayConfig
from nndoa.features import generate_dataset
from nndoa.harness.metrics import matched_errors
from nndoa.neural import TrainConfig
from nndoa.schemes import SchemeSpec, predict_scheme, train_scheme

cfg = ArrayConfig.half_wavelength(snapshot_len=1000)
train_set = generate_dataset(cfg, 1500, 3, 20.0, seed=0)
test_set = generate_dataset(cfg, 300, 3, 20.0, seed=10_000_000)

for kind in ("joint", "parallel", "serial"):
    spec = SchemeSpec(kind, 3, TrainConfig())
    scheme = train_scheme(train_set, spec)
    err = matched_errors(test_set.labels, predict_scheme(scheme, test_set.features)).mean(axis=1)
    dims = [m.input_dim for m in scheme.stages]
    print(f"{kind:>8s}: stage inputs {dims}, median error {np.median(err):.2f} deg")
