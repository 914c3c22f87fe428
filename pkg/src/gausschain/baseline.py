"""Exact sampling through a Cholesky factor (the O(d^3) reference method)."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .covariance import as_matrix
from .errors import FactorizationError
from .stats import RunningStats

PIVOT_TOL = 1e-12
CHOLESKY_CAP = 8192


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``a`` with ``a @ a.T == V``."""

    a: np.ndarray

    @property
    def dim(self):
        return self.a.shape[0]


def cholesky(model, pivot_tol=PIVOT_TOL, cap=CHOLESKY_CAP):
    """Unpivoted Cholesky factorization of a correlation matrix.

    Parameters
    ----------
    model : CovarianceModel or array_like
    pivot_tol : float
        Smallest accepted pivot ``a_kk^2``.

    Raises
    ------
    FactorizationError
        With the 0-based index of the first pivot below ``pivot_tol``.
    CapacityError
        If d exceeds ``cap``.
    """
    v = np.array(as_matrix(model, cap=cap), dtype=np.float64)
    a, info = lapack.dpotrf(np.asfortranarray(v), lower=1, clean=1)
    if info > 0:
        k = info - 1
        # LAPACK stops at the first non-positive pivot; recompute its value
        # from the valid leading k x k factor.
        lead = solve_triangular(a[:k, :k], v[:k, k], lower=True) if k else np.zeros(0)
        raise FactorizationError(k, v[k, k] - lead @ lead, pivot_tol)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    piv = np.diag(a) ** 2
    bad = np.flatnonzero(piv < pivot_tol)
    if bad.size:
        raise FactorizationError(bad[0], piv[bad[0]], pivot_tol)
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return CholeskyFactor(a)


def sample_exact(factor, stream):
    """One draw ``A Z ~ N(0, V)``; O(d^2)."""
    return factor.a @ stream.gaussians(factor.dim)


def sample_exact_many(factor, stream, count):
    """``count`` exact draws as a ``(count, d)`` array."""
    return stream.gaussians((count, factor.dim)) @ factor.a.T


def mc_estimate(factor, h, n_prime, stream, chunk=1024):
    """Plain Monte Carlo estimate of E h(X) from ``n_prime`` exact draws.

    Returns
    -------
    dict
        ``mean``, ``stdev`` (sample standard deviation of h) and
        ``var_of_mean`` (``stdev**2 / n_prime``).
    """
    if n_prime < 2:
        raise ValueError("n_prime must be >= 2")
    stats = RunningStats()
    done = 0
    while done < n_prime:
        k = min(chunk, n_prime - done)
        X = sample_exact_many(factor, stream, k)
        stats.update_batch(h.evaluate_rows(X))
        done += k
    sd = stats.std()
    return {"mean": stats.mean, "stdev": sd, "var_of_mean": sd * sd / n_prime}
