"""Chain averages with burn-in, coupled-chain MSE estimation, and error bounds.

The running-average estimator is

    h_{n,b} = (h(X_b) + ... + h(X_{n-1})) / (n - b)

computed from a single chain started at zero.  Its mean square error is
estimated by running, on the same indices and variates, a second chain
started from an exact N(0, V) draw; that chain's average is unbiased, so

    MSE(n; b) = var(h_{n,b}) + (E(h_{n,b} - h'_{n,b}))^2

where both terms are sample estimates over independent replications.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .baseline import cholesky
from .chain import _ensure_finite, _start, blocks, make_schedule
from .errors import NumericError
from .functionals import basket_kappa, orthant_kappa  # noqa: F401  (re-exported)
from .rng import RngStream
from .stats import RunningStats

DEFAULT_REPLICATIONS = 100


@dataclass(frozen=True)
class McmcEstimate:
    estimate: float
    n: int
    b: int


@dataclass(frozen=True)
class MseReport:
    """Outcome of :func:`estimate_mse`.

    ``mse = variance_term + bias_term**2``; ``mse_stderr`` is a delta-method
    standard error of ``mse``.
    """

    n: int
    b: int
    replications: int
    variance_term: float
    bias_term: float
    mse: float
    mcmc_mean: float
    exact_chain_mean: float
    mse_stderr: float

    @property
    def rmse(self):
        return math.sqrt(self.mse)

    def as_dict(self):
        out = {
            "n": self.n,
            "b": self.b,
            "replications": self.replications,
            "varianceTerm": self.variance_term,
            "biasTerm": self.bias_term,
            "mse": self.mse,
            "rmse": self.rmse,
            "mseStderr": self.mse_stderr,
            "mcmcMean": self.mcmc_mean,
            "exactChainMean": self.exact_chain_mean,
        }
        return out


def default_burnin(n):
    return n // 2


def _check_nb(n, b):
    n, b = int(n), int(b)
    if not 0 <= b < n:
        raise ValueError(f"need 0 <= b < n, got n={n}, b={b}")
    return n, b


def _windows(lo, hi, b):
    """Split block [lo, hi) at b into (burn part, averaged part) slices."""
    cut = min(max(b - lo, 0), hi - lo)
    return slice(0, cut), slice(cut, hi - lo)


def chain_average(model, h, n, b, schedule=None, stream=None, x0=None):
    """``h_{n,b}`` from one chain; O(d) memory."""
    n, b = _check_nb(n, b)
    h.check_model(model)
    stream = stream if stream is not None else RngStream()
    schedule = make_schedule(schedule, stream, model.dim)
    x = _start(model, x0)
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    spec = h.kernel_spec()
    total = 0.0
    lo = 0
    for idx, g in blocks(schedule, stream, n):
        hi = lo + idx.size
        burn, keep = _windows(lo, hi, b)
        if burn.stop > burn.start:
            core.advance(kind, data, r, p, x, idx[burn], g[burn])
        if keep.stop > keep.start:
            if spec is not None:
                total += core.advance_sum(kind, data, r, p, x, idx[keep], g[keep], *spec)
            else:
                for t in range(keep.start, keep.stop):
                    total += h(x)
                    core.advance(kind, data, r, p, x, idx[t:t + 1], g[t:t + 1])
        _ensure_finite(x)
        lo = hi
    return total / (n - b)


def coupled_averages(model, h, n, b, x0_exact, schedule=None, stream=None):
    """``(h_{n,b}, h'_{n,b})`` from the zero-start and exact-start chains."""
    n, b = _check_nb(n, b)
    h.check_model(model)
    stream = stream if stream is not None else RngStream()
    schedule = make_schedule(schedule, stream, model.dim)
    x = np.zeros(model.dim)
    y = _start(model, x0_exact)
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    spec = h.kernel_spec()
    sx = sy = 0.0
    lo = 0
    for idx, g in blocks(schedule, stream, n):
        hi = lo + idx.size
        burn, keep = _windows(lo, hi, b)
        if burn.stop > burn.start:
            core.advance_pair(kind, data, r, p, x, y, idx[burn], g[burn])
        if keep.stop > keep.start:
            if spec is not None:
                ax, ay = core.advance_pair_sum(kind, data, r, p, x, y, idx[keep], g[keep], *spec)
                sx += ax
                sy += ay
            else:
                for t in range(keep.start, keep.stop):
                    sx += h(x)
                    sy += h(y)
                    core.advance_pair(kind, data, r, p, x, y, idx[t:t + 1], g[t:t + 1])
        _ensure_finite(x, y)
        lo = hi
    return sx / (n - b), sy / (n - b)


def mcmc_estimate(model, h, n, b=None, schedule=None, stream=None, seed=0):
    """Estimate E h(X), X ~ N(0, V), by a burned-in chain average.

    Parameters
    ----------
    model : CovarianceModel
    h : TestFunctional
    n : int
        Chain length; states ``X_b .. X_{n-1}`` are averaged.
    b : int, optional
        Burn-in, default ``n // 2``.
    stream : RngStream, optional
        Defaults to ``RngStream(seed, 0)``.
    """
    b = default_burnin(n) if b is None else b
    stream = stream if stream is not None else RngStream(seed, 0)
    est = chain_average(model, h, n, b, schedule, stream)
    return McmcEstimate(est, int(n), int(b))


def _replicate(model, h, n, b, factor, seed, r, schedule):
    stream = RngStream(seed, r)
    z0 = stream.child(0).gaussians(model.dim)
    x0 = factor.a @ z0
    sched = schedule(stream) if callable(schedule) else None
    return coupled_averages(model, h, n, b, x0, sched, stream)


def estimate_mse(model, h, n, b=None, replications=DEFAULT_REPLICATIONS, seed=0,
                 threads=None, factor=None, schedule=None):
    """Coupled-chain estimate of MSE(n; b).

    Replication ``r`` uses ``RngStream(seed, r)``; its exact start is
    ``A Z_0`` with ``Z_0`` from a child stream, so the zero-start chain of
    replication 0 coincides with ``mcmc_estimate(..., seed=seed)``.  Results
    are reduced in replication order, so the report does not depend on
    ``threads``.

    Parameters
    ----------
    factor : CholeskyFactor, optional
        Reused across replications; computed from ``model`` if omitted.
    schedule : callable, optional
        ``schedule(stream)`` builds an index schedule per replication;
        uniform random indices by default.
    """
    b = default_burnin(n) if b is None else b
    n, b = _check_nb(n, b)
    R = int(replications)
    if R < 2:
        raise ValueError("need at least 2 replications")
    h.check_model(model)
    factor = cholesky(model) if factor is None else factor
    threads = threads or os.cpu_count() or 1

    def one(r):
        return _replicate(model, h, n, b, factor, seed, r, schedule)

    if threads > 1 and R > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(one, range(R)))
    else:
        pairs = [one(r) for r in range(R)]

    hs, hp, diff = RunningStats(), RunningStats(), RunningStats()
    for a, e in pairs:
        hs.update(a)
        hp.update(e)
        diff.update(a - e)
    var_term = hs.var()
    bias = diff.mean
    mse = var_term + bias * bias
    se_var = var_term * math.sqrt(2.0 / (R - 1))
    se_bias = diff.stderr()
    mse_se = math.sqrt(se_var**2 + (2.0 * bias * se_bias) ** 2)
    if not all(map(math.isfinite, (var_term, bias, mse))):
        raise NumericError("MSE estimate is not finite")
    return MseReport(n, b, R, var_term, bias, mse, hs.mean, hp.mean, mse_se)


# -- closed-form bounds ---------------------------------------------------------


def mse_bound(kappa, d, n):
    """``18 kappa^2 d^2 / n``: MSE bound for a kappa-Lipschitz h without burn-in."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 18.0 * kappa * kappa * d * d / n


def wasserstein_bound(d, n):
    """``d / sqrt(n)``: bound on W2(law of X_n, N(0, V)) under uniform indices."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return d / math.sqrt(n)


def kappa_prime(kappa, lam, gamma, d):
    """``2 kappa d^(1+gamma) / (lam gamma)``."""
    if lam <= 0:
        raise ValueError("smallest eigenvalue must be positive")
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    return 2.0 * kappa * d ** (1.0 + gamma) / (lam * gamma)


def burnin_bias_bound(kappa_p, lam, gamma, n, d):
    """Bias bound ``2 kappa' exp(-lam gamma n / (4 d)) / n`` for b = n/2.

    Requires a positive-definite V (``lam > 0``), even n and d >= 3.
    """
    if lam <= 0:
        raise ValueError("smallest eigenvalue must be positive")
    if n <= 0 or n % 2:
        raise ValueError("n must be a positive even integer")
    if d < 3:
        raise ValueError("d must be >= 3")
    return 2.0 * kappa_p * math.exp(-lam * gamma * n / (4.0 * d)) / n


def burnin_delta(kappa, lam, gamma, d, sigma):
    """``ceil(4 d ln(kappa d / Sigma) / (lam gamma))``, the mixing horizon in the b = n/2 MSE bound."""
    if lam <= 0 or sigma <= 0:
        raise ValueError("lam and sigma must be positive")
    return int(math.ceil(4.0 * d * math.log(kappa * d / sigma) / (lam * gamma)))


def burnin_mse_bound(delta, sigma, n):
    """``34 delta Sigma^2 / n``, valid for even n > 2 delta."""
    if n <= 2 * delta:
        raise ValueError("bound needs n > 2 * delta")
    return 34.0 * delta * sigma * sigma / n
