"""
Snapshots and covariance features
=================================

Two sources hit a six-element half-wavelength array. We look at the
steering vectors, the sample covariance and the 42-long feature vector the
networks consume.
"""
import numpy as np

from nndoa import ArrayConfig, SourceScene, covariance, extract_features, steering_vector, synthesize
from nndoa.features import generate_dataset

np.set_printoptions(precision=3, suppress=True)

cfg = ArrayConfig.half_wavelength()
print(f"{cfg.num_antennas} antennas, spacing {cfg.element_spacing:.2f} m, wavelength {cfg.wavelength:.2f} m")

# a source at 30 degrees advances the phase by pi/2 per element
print("a(30 deg) =", steering_vector(cfg, np.deg2rad(30.0)))

scene = SourceScene(tuple(np.deg2rad([-20.0, 40.0])), snr_db=20.0)
x = synthesize(cfg, scene, rng_seed=0)
r = covariance(x)
print("snapshot matrix", x.data.shape, "-> covariance", r.shape)
print("eigenvalues:", np.linalg.eigvalsh(r)[::-1])  # two large, four at the noise floor

v = extract_features(r)
print(f"feature vector: {v.size} values (real parts of the upper triangle, then imaginary parts)")

# labelled data: angles uniform on [-90, 90), stored sorted and in degrees
data = generate_dataset(cfg.with_(snapshot_len=400), 5, 2, 20.0, seed=1)
print("labels:\n", data.labels)
