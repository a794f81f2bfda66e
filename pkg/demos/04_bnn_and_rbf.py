"""
Bayesian and radial-basis variants
==================================

A Bayes-by-Backprop network reports a predictive spread along with its
estimate; the spread narrows as the training set grows. The RBF variant
puts frozen Gaussian units, centred by k-means, in front of the MLP.
"""
import numpy as np

from nndoa import ArrayConfig
from nndoa.features import generate_dataset
from nndoa.harness.metrics import matched_errors
from nndoa.neural import TrainConfig, forward, predict_bnn, train, train_bnn

cfg = ArrayConfig.half_wavelength(snapshot_len=1000)
train_set = generate_dataset(cfg, 1000, 2, 20.0, seed=0)
test_set = generate_dataset(cfg, 200, 2, 20.0, seed=10_000_000)

for n in (250, 1000):
    bnn, _ = train_bnn(train_set.subset(np.arange(n)), TrainConfig(), epochs=200)
    mean, std = predict_bnn(bnn, test_set.features, mc_samples=50)
    err = matched_errors(test_set.labels, np.sort(mean, axis=1)).mean(axis=1)
    print(f"BNN on {n:4d} samples: median error {np.median(err):5.2f} deg, median spread {np.median(std):.2f} deg")

rbf, _ = train(train_set, TrainConfig(rbf_units=100))
err = matched_errors(test_set.labels, np.sort(forward(rbf, test_set.features), axis=1)).mean(axis=1)
print(f"RBF-input MLP: median error {np.median(err):.2f} deg")
