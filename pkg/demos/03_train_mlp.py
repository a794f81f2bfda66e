"""
Training the regression network
===============================

Default settings: three hidden layers of 25 ReLU units, batch norm, 10 %
dropout, L2 weight decay, Adam and early stopping. The default run is a
small one; pass ``--full`` for 4000/2000 samples.
"""
import argparse
import time

import numpy as np

from nndoa import ArrayConfig
from nndoa.features import generate_dataset
from nndoa.harness.metrics import matched_errors
from nndoa.neural import TrainConfig, forward, train

p = argparse.ArgumentParser()
p.add_argument("--full", action="store_true")
args = p.parse_args()
n_train, n_test = (4000, 2000) if args.full else (1000, 300)

cfg = ArrayConfig.half_wavelength()
t0 = time.perf_counter()
train_set = generate_dataset(cfg, n_train, 2, 20.0, seed=0)
test_set = generate_dataset(cfg, n_test, 2, 20.0, seed=10_000_000)
print(f"generated {n_train}+{n_test} samples in {time.perf_counter() - t0:.1f} s")

model, hist = train(train_set, TrainConfig())
print(f"stopped at epoch {hist.stopped_epoch}, best validation loss at epoch {hist.best_epoch}")

pred = np.sort(forward(model, test_set.features), axis=1)
err = matched_errors(test_set.labels, pred).mean(axis=1)
print(f"median error {np.median(err):.2f} deg, 90th percentile {np.percentile(err, 90):.2f} deg")

# most of the large errors sit near endfire, where sin(theta) flattens out
edge = np.abs(test_set.labels).max(axis=1) > 75
print(f"median error with a source beyond 75 deg: {np.median(err[edge]):.2f}, otherwise {np.median(err[~edge]):.2f}")
