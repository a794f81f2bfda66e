"""MUSIC direction finding.

Covariance eigendecomposition (cyclic complex Jacobi), noise-subspace
pseudo-spectrum on a uniform angle grid and top-K local maximum picking.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .array_signal import ArrayConfig, steering_matrix
from .errors import ConfigurationError, DomainError, NumericError
from .features import covariance

HERMITIAN_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eig_hermitian(a, tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Eigen-decompose a Hermitian matrix with cyclic Jacobi rotations.

    Each rotation first removes the phase of ``a[p, q]`` with a diagonal
    unitary and then applies the real symmetric Jacobi rotation that zeroes
    it. Sweeps stop once the off-diagonal Frobenius norm is below
    ``tol * ||a||_F``. Eigenvalues come back sorted descending.
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = np.abs(a).max() if a.size else 0.0
    if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(scale, 1.0):
        raise DomainError("matrix is not Hermitian")
    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0:
        return EigenDecomposition(np.zeros(n), v)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2 * mag)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                # u = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p], a[q, q] = a[p, p].real, a[q, q].real
                v[:, idx] = v[:, idx] @ u
    else:
        raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    w = a.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


@dataclass(frozen=True)
class SpectrumCurve:
    """MUSIC pseudo-spectrum sampled on a uniform grid of angles (degrees)."""

    grid: np.ndarray
    values: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("angle_deg,p\n")
            for g, v in zip(self.grid, self.values):
                fh.write(f"{float(g)!r},{float(v)!r}\n")


class PeakResult(NamedTuple):
    angles: np.ndarray
    merged: bool


def angle_grid(resolution_deg: float) -> np.ndarray:
    if not resolution_deg > 0:
        raise ConfigurationError("resolution_deg must be positive")
    n = int(round(180.0 / resolution_deg))
    if not np.isclose(n * resolution_deg, 180.0, rtol=0, atol=1e-9):
        raise ConfigurationError(f"resolution {resolution_deg} does not divide 180 degrees")
    grid = -90.0 + resolution_deg * np.arange(n + 1)
    grid[-1] = 90.0
    return grid


@lru_cache(maxsize=16)
def _grid_steering(config: ArrayConfig, resolution_deg: float):
    grid = angle_grid(resolution_deg)
    return grid, steering_matrix(config, np.deg2rad(grid))


def noise_subspace(r, num_sources: int) -> np.ndarray:
    m = r.shape[0]
    if not 1 <= num_sources < m:
        raise ConfigurationError(f"need 1 <= num_sources < {m}, got {num_sources}")
    return eig_hermitian(r).eigenvectors[:, num_sources:]


def pseudo_spectrum(r, num_sources: int, config: ArrayConfig, resolution_deg: float = 0.01) -> SpectrumCurve:
    """``p(theta) = 1 / ||U_n^H a(theta)||^2`` over [-90, 90] degrees."""
    r = np.asarray(r)
    if r.shape != (config.num_antennas, config.num_antennas):
        raise ConfigurationError(f"covariance shape {r.shape} does not match {config.num_antennas} antennas")
    un = noise_subspace(r, num_sources)
    grid, steer = _grid_steering(config, float(resolution_deg))
    proj = un.conj().T @ steer
    denom = np.einsum("ij,ij->j", proj.real, proj.real) + np.einsum("ij,ij->j", proj.imag, proj.imag)
    return SpectrumCurve(grid, 1.0 / np.maximum(denom, np.finfo(float).tiny))


def pick_peaks(curve: SpectrumCurve, k: int) -> PeakResult:
    """Largest ``k`` strict interior local maxima, returned sorted by angle.

    When fewer than ``k`` local maxima exist the remainder is filled with the
    largest not-yet-selected grid values and ``merged`` is set.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    p = np.asarray(curve.values)
    if p.size == 0:
        raise DomainError("empty spectrum")
    interior = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
    # descending value, ties to the smaller angle (grid is increasing)
    chosen = list(interior[np.lexsort((interior, -p[interior]))][:k])
    merged = len(chosen) < k
    if merged:
        rest = np.setdiff1d(np.arange(p.size), chosen)
        rest = rest[np.lexsort((rest, -p[rest]))]
        chosen += list(rest[: k - len(chosen)])
    return PeakResult(np.sort(curve.grid[np.asarray(chosen, dtype=int)]), merged)


def music_from_covariance(r, k: int, config: ArrayConfig, resolution_deg: float = 0.01) -> PeakResult:
    return pick_peaks(pseudo_spectrum(r, k, config, resolution_deg), k)


def music_estimate(x, k: int, config: ArrayConfig, resolution_deg: float = 0.01) -> PeakResult:
    """Estimate ``k`` arrival angles (degrees) from a snapshot matrix."""
    return music_from_covariance(covariance(x), k, config, resolution_deg)
