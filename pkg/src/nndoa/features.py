"""Covariance features and labeled dataset generation.

Feature layout (version 1): the upper triangle of ``R_xx`` including the
diagonal, taken row-major, real parts first and then imaginary parts.
For ``M`` antennas this gives ``M (M + 1)`` real values.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_signal import ArrayConfig, SnapshotMatrix, SourceScene, SpacingPerturbation, synthesize
from .errors import ConfigurationError, ShapeError

FEATURE_LAYOUT = "triu-rowmajor-real-imag"
FEATURE_LAYOUT_VERSION = 1
STD_FLOOR = 1e-12


def feature_length(num_antennas: int) -> int:
    return num_antennas * (num_antennas + 1)


def covariance(x) -> np.ndarray:
    """Sample covariance ``X X^H / L`` of a snapshot matrix (or raw array)."""
    data = x.data if isinstance(x, SnapshotMatrix) else np.asarray(x)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ShapeError(f"expected a 2-D snapshot matrix, got shape {data.shape}")
    r = data @ data.conj().T / data.shape[1]
    # exact Hermitian symmetry, real diagonal
    return (r + r.conj().T) / 2


def extract_features(r) -> np.ndarray:
    r = np.asarray(r)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ShapeError(f"covariance must be square, got shape {r.shape}")
    upper = r[np.triu_indices(r.shape[0])]
    return np.concatenate([upper.real, upper.imag]).astype(float)


def features_to_covariance(v) -> np.ndarray:
    """Rebuild the Hermitian covariance from an un-normalized feature vector."""
    v = np.asarray(v, dtype=float)
    m = int(round((np.sqrt(1 + 4 * v.size) - 1) / 2))
    if feature_length(m) != v.size:
        raise ShapeError(f"{v.size} is not a valid feature length M(M+1)")
    half = v.size // 2
    iu = np.triu_indices(m)
    r = np.zeros((m, m), dtype=complex)
    r[iu] = v[:half] + 1j * v[half:]
    r = r + np.triu(r, 1).conj().T
    r[np.diag_indices(m)] = r.diagonal().real
    return r


@dataclass(frozen=True)
class NormStats:
    """Per-feature z-score statistics."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x) -> "NormStats":
        x = np.asarray(x, dtype=float)
        std = x.std(axis=0)
        return cls(x.mean(axis=0), np.where(std < STD_FLOOR, 1.0, std))

    @classmethod
    def identity(cls, dim: int) -> "NormStats":
        return cls(np.zeros(dim), np.ones(dim))

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def normalize(features, stats: NormStats) -> np.ndarray:
    """Z-score ``features`` (one vector or a row-stacked batch) with ``stats``."""
    v = np.asarray(features, dtype=float)
    if v.shape[-1] != stats.mean.shape[0]:
        raise ShapeError(f"feature length {v.shape[-1]} != stats length {stats.mean.shape[0]}")
    std = np.where(stats.std < STD_FLOOR, 1.0, stats.std)
    return (v - stats.mean) / std


@dataclass
class Dataset:
    """Raw feature rows with sorted labels in degrees."""

    features: np.ndarray
    labels: np.ndarray
    config: ArrayConfig
    snr_db: float
    seed: int
    stats: NormStats = field(default=None)
    perturbation: SpacingPerturbation | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).reshape(len(self.features), -1)
        if self.stats is None:
            self.stats = NormStats.fit(self.features)

    def __len__(self):
        return len(self.features)

    @property
    def num_sources(self) -> int:
        return self.labels.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.config, self.snr_db,
                       self.seed, perturbation=self.perturbation)

    def save(self, path) -> None:
        """Write ``path`` as CSV plus a JSON sidecar next to it."""
        path = Path(path)
        d, k = self.feature_dim, self.num_sources
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"f{i}" for i in range(d)] + [f"theta{i}" for i in range(k)])
            for f, y in zip(self.features, self.labels):
                w.writerow([repr(float(v)) for v in f] + [repr(float(v)) for v in y])
        meta = {
            "config": config_to_dict(self.config),
            "snr_db": _json_float(self.snr_db),
            "seed": self.seed,
            "num_samples": len(self),
            "num_sources": k,
            "normalization": self.stats.to_dict(),
            "perturbation": None if self.perturbation is None else list(self.perturbation.epsilon),
            "feature_layout": FEATURE_LAYOUT,
            "feature_layout_version": FEATURE_LAYOUT_VERSION,
            "angle_unit": "degree",
        }
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Dataset":
        path = Path(path)
        meta = json.loads(sidecar_path(path).read_text())
        if meta.get("feature_layout_version") != FEATURE_LAYOUT_VERSION:
            raise ConfigurationError(f"unsupported feature layout in {path}")
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        d = sum(1 for h in header if h.startswith("f"))
        pert = meta.get("perturbation")
        return cls(body[:, :d], body[:, d:], config_from_dict(meta["config"]),
                   float(meta["snr_db"]), meta["seed"],
                   stats=NormStats.from_dict(meta["normalization"]),
                   perturbation=None if pert is None else SpacingPerturbation(tuple(pert)))


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _json_float(v):
    return v if np.isfinite(v) else str(v)


def config_to_dict(config: ArrayConfig) -> dict:
    return {
        "num_antennas": config.num_antennas,
        "element_spacing": config.element_spacing,
        "carrier_freq": config.carrier_freq,
        "wavelength": config.wavelength,
        "snapshot_len": config.snapshot_len,
        "angle_convention": config.angle_convention,
        "sample_rate": config.sample_rate,
    }


def config_from_dict(d: dict) -> ArrayConfig:
    d = dict(d)
    if "spacing_wavelengths" in d:
        frac = d.pop("spacing_wavelengths")
        wl = d.get("wavelength") or ArrayConfig(carrier_freq=d.get("carrier_freq", 1e6)).wavelength
        d["wavelength"] = wl
        d["element_spacing"] = frac * wl
    try:
        return ArrayConfig(**d)
    except TypeError as exc:
        raise ConfigurationError(f"bad array config: {exc}") from None


def sample_features(config, scene, perturbation=None, rng_seed=0) -> np.ndarray:
    return extract_features(covariance(synthesize(config, scene, perturbation, rng_seed)))


def generate_dataset(config: ArrayConfig, num_samples: int, num_sources: int, snr_db: float,
                     seed: int, *, perturbation: SpacingPerturbation | None = None,
                     angles=None, source_power: float = 1.0,
                     signal_kind: str = "complex_gaussian") -> Dataset:
    """Synthesize ``num_samples`` labeled feature vectors.

    Sample ``i`` is drawn from its own generator seeded with ``seed + i``, so
    any subset can be regenerated independently. Angles are i.i.d. uniform on
    [-90, 90) degrees unless ``angles`` (radians, ``num_samples x K``) is given.
    """
    if num_sources >= config.num_antennas:
        raise ConfigurationError(f"num_sources ({num_sources}) must be < num_antennas ({config.num_antennas})")
    if angles is not None:
        angles = np.asarray(angles, dtype=float).reshape(num_samples, num_sources)
    feats = np.empty((num_samples, feature_length(config.num_antennas)))
    labels = np.empty((num_samples, num_sources))
    for i in range(num_samples):
        rng = np.random.default_rng(seed + i)
        theta = rng.uniform(-np.pi / 2, np.pi / 2, num_sources) if angles is None else angles[i]
        signal_seed = int(rng.integers(2**63))
        scene = SourceScene(tuple(theta), snr_db, source_power, signal_kind)
        feats[i] = sample_features(config, scene, perturbation, signal_seed)
        labels[i] = np.sort(np.rad2deg(theta))
    return Dataset(feats, labels, config, snr_db, seed, perturbation=perturbation)


def close_pair_angles(num_samples: int, max_separation_deg: float, seed: int,
                      limit_deg: float = 90.0) -> np.ndarray:
    """Random two-source angle pairs (radians) separated by less than ``max_separation_deg``."""
    rng = np.random.default_rng(seed)
    sep = rng.uniform(0, max_separation_deg, num_samples)
    first = rng.uniform(-limit_deg, limit_deg - sep)
    return np.deg2rad(np.column_stack([first, first + sep]))
