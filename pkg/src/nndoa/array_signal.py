"""Uniform linear array signal model.

Builds steering vectors and snapshot matrices ``X = A S + N`` for ``K``
far-field narrowband sources impinging on an ``M`` element linear array.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

SPEED_OF_LIGHT = 299_792_458.0
# tolerance on the [-pi/2, pi/2] check so that np.deg2rad(90) passes
_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    """Physical scenario of the receiving array.

    Attributes:
        num_antennas: Number of array elements ``M``.
        element_spacing: Inter-element distance ``d`` in meters.
        carrier_freq: Source carrier frequency in Hz.
        snapshot_len: Number of time samples ``L`` per snapshot matrix.
        wavelength: Carrier wavelength in meters. Derived from
            ``carrier_freq`` when left as ``None``.
        angle_convention: ``"sin"`` (default, identifiable on
            [-90, 90] degrees) or ``"cos"``.
        sample_rate: Sampling rate used by the sinusoid source model.
            Defaults to eight samples per carrier period.
    """

    num_antennas: int = 6
    element_spacing: float = 0.10
    carrier_freq: float = 1e6
    snapshot_len: int = 4000
    wavelength: float | None = None
    angle_convention: str = "sin"
    sample_rate: float | None = None

    def __post_init__(self):
        if self.wavelength is None:
            object.__setattr__(self, "wavelength", SPEED_OF_LIGHT / self.carrier_freq)
        if self.sample_rate is None:
            object.__setattr__(self, "sample_rate", 8.0 * self.carrier_freq)
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 2:
            raise ConfigurationError(f"num_antennas must be an integer >= 2, got {self.num_antennas}")
        if not self.element_spacing > 0:
            raise ConfigurationError(f"element_spacing must be positive, got {self.element_spacing}")
        if int(self.snapshot_len) != self.snapshot_len or self.snapshot_len < 1:
            raise ConfigurationError(f"snapshot_len must be an integer >= 1, got {self.snapshot_len}")
        if not self.wavelength > 0:
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        if self.angle_convention not in ("sin", "cos"):
            raise ConfigurationError(f"angle_convention must be 'sin' or 'cos', got {self.angle_convention!r}")

    @classmethod
    def half_wavelength(cls, num_antennas=6, carrier_freq=1e6, snapshot_len=4000, **kwargs):
        """Array with ``d = lambda / 2``, the setting used by default experiments."""
        wavelength = kwargs.pop("wavelength", None) or SPEED_OF_LIGHT / carrier_freq
        return cls(num_antennas=num_antennas, element_spacing=wavelength / 2,
                   carrier_freq=carrier_freq, snapshot_len=snapshot_len,
                   wavelength=wavelength, **kwargs)

    @classmethod
    def reference(cls, **kwargs):
        """Reference scenario: 6 antennas, 0.10 m spacing, 1 MHz, L = 4000 (d/lambda ~ 3e-7)."""
        return cls(num_antennas=6, element_spacing=0.10, carrier_freq=1e6,
                   snapshot_len=4000, **kwargs)

    @property
    def positions(self) -> np.ndarray:
        """Nominal element positions ``m * d`` in meters."""
        return np.arange(self.num_antennas) * self.element_spacing

    def with_(self, **changes) -> "ArrayConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SourceScene:
    """Angles and signal parameters of the impinging sources (angles in radians)."""

    angles: tuple[float, ...]
    snr_db: float = 20.0
    source_power: float = 1.0
    signal_kind: str = "complex_gaussian"

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.angles))
        object.__setattr__(self, "angles", angles)
        if not angles:
            raise ConfigurationError("scene needs at least one source angle")
        for a in angles:
            _check_angle(a)
        if not self.source_power > 0:
            raise ConfigurationError("source_power must be positive")
        if self.signal_kind not in ("complex_gaussian", "sinusoid"):
            raise ConfigurationError(f"unknown signal_kind {self.signal_kind!r}")

    @property
    def num_sources(self) -> int:
        return len(self.angles)

    @property
    def noise_variance(self) -> float:
        """Per-antenna complex noise variance; zero when ``snr_db`` is +inf."""
        if np.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return self.source_power * 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class SpacingPerturbation:
    """Per-element position offsets ``eps_m`` (meters) added to ``m * d``."""

    epsilon: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))

    @classmethod
    def uniform(cls, config: ArrayConfig, fraction: float, seed: int) -> "SpacingPerturbation":
        """Offsets drawn i.i.d. from ``U(-fraction * d, fraction * d)``."""
        rng = np.random.default_rng(seed)
        eps = rng.uniform(-fraction, fraction, config.num_antennas) * config.element_spacing
        return cls(tuple(eps))

    def positions(self, config: ArrayConfig) -> np.ndarray:
        if len(self.epsilon) != config.num_antennas:
            raise ConfigurationError(
                f"perturbation has {len(self.epsilon)} offsets for {config.num_antennas} antennas")
        pos = config.positions + np.asarray(self.epsilon)
        if np.any(np.diff(pos) <= 0):
            raise ConfigurationError("perturbed element positions must be strictly increasing")
        return pos


@dataclass
class SnapshotMatrix:
    """Received data ``X`` (antennas x time) with the scene that produced it."""

    data: np.ndarray
    config: ArrayConfig
    scene: SourceScene | None = None
    perturbation: SpacingPerturbation | None = field(default=None, repr=False)

    def __post_init__(self):
        expected = (self.config.num_antennas, self.config.snapshot_len)
        if self.data.shape != expected:
            raise ConfigurationError(f"snapshot data shape {self.data.shape} != {expected}")


def _check_angle(angle):
    a = np.asarray(angle, dtype=float)
    if not np.all(np.abs(a) <= np.pi / 2 + _ANGLE_SLACK):
        raise DomainError(f"angle(s) outside [-pi/2, pi/2]: {angle}")


def _direction(config: ArrayConfig, angle):
    return np.sin(angle) if config.angle_convention == "sin" else np.cos(angle)


def steering_vector(config: ArrayConfig, angle: float, positions: Sequence[float] | None = None) -> np.ndarray:
    """Array response ``a(theta)`` to a plane wave from ``angle`` (radians).

    Element ``m`` is ``exp(j 2 pi p_m g(theta) / lambda)`` with ``p_m = m d``
    unless explicit element ``positions`` are given, and ``g`` the sine or
    cosine according to ``config.angle_convention``.
    """
    _check_angle(angle)
    pos = config.positions if positions is None else np.asarray(positions, dtype=float)
    phase = 2 * np.pi * pos * _direction(config, angle) / config.wavelength
    return np.exp(1j * phase)


def steering_matrix(config: ArrayConfig, angles, positions=None) -> np.ndarray:
    """Stack steering vectors column-wise, shape ``(M, len(angles))``."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    _check_angle(angles)
    pos = config.positions if positions is None else np.asarray(positions, dtype=float)
    phase = 2 * np.pi * np.outer(pos, _direction(config, angles)) / config.wavelength
    return np.exp(1j * phase)


def _source_signals(config, scene, rng):
    k, n = scene.num_sources, config.snapshot_len
    if scene.signal_kind == "complex_gaussian":
        s = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        return s * np.sqrt(scene.source_power / 2)
    # identical carriers with random phase: fully coherent sources
    t = np.arange(n) / config.sample_rate
    phi = rng.uniform(0, 2 * np.pi, (k, 1))
    return np.sqrt(2 * scene.source_power) * np.sin(2 * np.pi * config.carrier_freq * t + phi) + 0j


def synthesize(config: ArrayConfig, scene: SourceScene,
               perturbation: SpacingPerturbation | None = None, rng_seed: int = 0) -> SnapshotMatrix:
    """Draw a snapshot matrix ``X = A S + N`` for ``scene``.

    Noise is circular complex Gaussian with variance
    ``source_power * 10**(-snr_db / 10)``; ``snr_db = inf`` disables it.
    Output is a pure function of the arguments.
    """
    if scene.num_sources >= config.num_antennas:
        raise ConfigurationError(
            f"{scene.num_sources} sources need more than that many antennas (have {config.num_antennas})")
    positions = None if perturbation is None else perturbation.positions(config)
    rng = np.random.default_rng(rng_seed)
    s = _source_signals(config, scene, rng)
    x = steering_matrix(config, scene.angles, positions) @ s
    var = scene.noise_variance
    if var > 0:
        shape = (config.num_antennas, config.snapshot_len)
        x = x + np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return SnapshotMatrix(x, config, scene, perturbation)
