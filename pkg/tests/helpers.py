"""Shared fixtures-free helpers for the test suite."""

import numpy as np


def random_correlation(d, seed, rank_extra=2, jitter=0.05):
    """Random positive-definite correlation matrix.

    ``G G^T + jitter I`` rescaled to a unit diagonal; independent of the
    package's own generators.
    """
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d + rank_extra))
    a = g @ g.T + jitter * d * np.eye(d)
    s = 1.0 / np.sqrt(np.diag(a))
    v = a * s[:, None] * s[None, :]
    v = 0.5 * (v + v.T)
    np.fill_diagonal(v, 1.0)
    return v


V2 = np.array([[1.0, 0.5], [0.5, 1.0]])
