"""Permutation-matched angle errors, ECDFs and summary statistics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

MAX_MATCH_SOURCES = 4


def matched_error(true_angles, predicted_angles) -> np.ndarray:
    """Absolute errors under the assignment minimizing their sum.

    Every permutation of the predictions is tried (K <= 4). Errors are
    returned in the order of ``true_angles``.
    """
    t = np.atleast_1d(np.asarray(true_angles, dtype=float))
    p = np.atleast_1d(np.asarray(predicted_angles, dtype=float))
    if t.shape != p.shape or t.ndim != 1:
        raise DomainError(f"angle counts differ: {t.shape} vs {p.shape}")
    if len(t) > MAX_MATCH_SOURCES:
        raise DomainError(f"matching supports at most {MAX_MATCH_SOURCES} angles")
    best = None
    for perm in itertools.permutations(range(len(t))):
        err = np.abs(t - p[list(perm)])
        if best is None or err.sum() < best.sum():
            best = err
    return best


def matched_errors(true, pred) -> np.ndarray:
    """Row-wise :func:`matched_error` for ``(n, K)`` arrays."""
    true, pred = np.atleast_2d(true), np.atleast_2d(pred)
    if true.shape != pred.shape:
        raise DomainError(f"shape mismatch {true.shape} vs {pred.shape}")
    return np.array([matched_error(t, p) for t, p in zip(true, pred)]).reshape(true.shape)


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous step function; ``F(x)`` is the fraction of errors <= x."""

    x: np.ndarray
    f: np.ndarray
    data: np.ndarray

    def __call__(self, v):
        return np.searchsorted(self.data, v, side="right") / self.data.size

    def on(self, axis) -> np.ndarray:
        return self(np.asarray(axis, dtype=float))


def ecdf(errors) -> Ecdf:
    e = np.sort(np.ravel(np.asarray(errors, dtype=float)))
    if e.size == 0:
        raise DomainError("ECDF of an empty sample")
    x = np.unique(e)
    return Ecdf(x, np.searchsorted(e, x, side="right") / e.size, e)


def summarize(errors) -> dict:
    e = np.ravel(np.asarray(errors, dtype=float))
    return {
        "count": int(e.size),
        "median": float(np.median(e)),
        "mean": float(np.mean(e)),
        "p90": float(np.percentile(e, 90)),
        "rmse": float(np.sqrt(np.mean(e * e))),
        "max": float(np.max(e)),
    }
