"""Center and width selection for radial-basis units."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import ConfigurationError


class RbfParams(NamedTuple):
    centers: np.ndarray
    widths: np.ndarray


def _sq_dist(x, c):
    return np.maximum((x * x).sum(1)[:, None] - 2 * x @ c.T + (c * c).sum(1)[None, :], 0.0)


def fit_rbf_centers(features, num_units: int, seed: int, iterations: int = 50) -> RbfParams:
    """K-means centers with farthest-point initialization.

    The first center is a random sample, each further one the sample farthest
    from those already chosen. Empty clusters are reseeded from a random
    sample. Width of unit ``u`` is ``1 / (mean member distance + 1e-6)``.
    """
    x = np.asarray(features, dtype=float)
    n = len(x)
    if not 1 <= num_units <= n:
        raise ConfigurationError(f"num_units must be in [1, {n}], got {num_units}")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    mind = _sq_dist(x, x[chosen])[:, 0]
    for _ in range(1, num_units):
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, _sq_dist(x, x[nxt:nxt + 1])[:, 0])
    centers = x[chosen].copy()

    for _ in range(iterations):
        assign = np.argmin(_sq_dist(x, centers), axis=1)
        new = centers.copy()
        for u in range(num_units):
            members = x[assign == u]
            new[u] = members.mean(axis=0) if len(members) else x[rng.integers(n)]
        if np.array_equal(new, centers):
            break
        centers = new

    assign = np.argmin(_sq_dist(x, centers), axis=1)
    widths = np.empty(num_units)
    for u in range(num_units):
        members = x[assign == u]
        spread = np.linalg.norm(members - centers[u], axis=1).mean() if len(members) else 0.0
        widths[u] = 1.0 / (spread + 1e-6)
    return RbfParams(centers, widths)
