"""Multiple angle-of-arrival estimation on uniform linear arrays.

MUSIC and neural-network estimators over a shared synthetic data pipeline.
"""
from .array_signal import ArrayConfig, SnapshotMatrix, SourceScene, SpacingPerturbation, steering_vector, synthesize
from .features import Dataset, covariance, extract_features, generate_dataset, normalize
from .music import eig_hermitian, music_estimate, pick_peaks, pseudo_spectrum

__version__ = "0.1.0"

__all__ = ["ArrayConfig", "Dataset", "SnapshotMatrix", "SourceScene", "SpacingPerturbation", "covariance",
           "eig_hermitian", "extract_features", "generate_dataset", "music_estimate", "normalize",
           "pick_peaks", "pseudo_spectrum", "steering_vector", "synthesize"]
