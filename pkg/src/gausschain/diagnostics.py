"""Small-d exact oracles and numeric certificates.

The chain's error is governed by random products of projections
``M_n = P_{i_{n-1}} ... P_{i_0}`` with ``P_i = I - f_i f_i^T`` and
``f_i = sqrt(V) e_i``.  For uniform indices the expectation
``E(M_n^T V M_n)`` obeys the linear recursion ``W <- T(W)`` with

    T(W) = (1/d) sum_i P_i W P_i,

so its trace, ``E|M_n|_V^2``, equals the trace deficit ``tr(V - cov(X_n))``
and can be computed exactly for small d.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import as_matrix
from .errors import CapacityError, NotPSDError
from .rng import RngStream
from .stats import RunningCovariance

PSD_TOL = 1e-10
ORACLE_CAP = 64
MAX_STEPS = 10_000


@dataclass(frozen=True)
class SqrtFactor:
    """Symmetric ``s`` with ``s @ s == V``."""

    s: np.ndarray


@dataclass(frozen=True)
class OperatorTrace:
    """``values[j] = tr(T^j(V)) = E|M_j|_V^2`` for j = 0..n_max."""

    values: np.ndarray
    d: int

    def partial_sums(self):
        return np.cumsum(self.values)


def _sym_eig(a, tol=PSD_TOL):
    a = 0.5 * (a + a.T)
    w, q = np.linalg.eigh(a)
    if w[0] < -tol:
        raise NotPSDError(w[0], tol)
    return np.clip(w, 0.0, None), q


def matrix_sqrt(v, tol=PSD_TOL, cap=ORACLE_CAP * 64):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative
    raises :class:`NotPSDError`.
    """
    v = as_matrix(v, cap=cap)
    w, q = _sym_eig(v, tol)
    s = (q * np.sqrt(w)) @ q.T
    return SqrtFactor(0.5 * (s + s.T))


def _t_operator(w, v, f):
    """(1/d) sum_i P_i W P_i in O(d^3).

    Expanding P_i W P_i and using sum_i f_i f_i^T = V gives
    d W - V W - W V + F diag(f_i^T W f_i) F^T.
    """
    d = w.shape[0]
    c = np.einsum("ji,jk,ki->i", f, w, f)
    out = d * w - v @ w - w @ v + (f * c) @ f.T
    out /= d
    return 0.5 * (out + out.T)


def t_operator_direct(w, v):
    """Reference O(d^4) evaluation of T with explicit projections (tests)."""
    d = w.shape[0]
    f = matrix_sqrt(v).s
    out = np.zeros_like(w)
    for i in range(d):
        p = np.eye(d) - np.outer(f[:, i], f[:, i])
        out += p @ w @ p
    return out / d


def _oracle_inputs(v, cap):
    v = as_matrix(v)
    if v.shape[0] > cap:
        raise CapacityError(f"d={v.shape[0]} exceeds the oracle cap {cap}")
    return v, matrix_sqrt(v).s


def expected_m_norms(v, n_max, cap=ORACLE_CAP):
    """Exact ``E|M_j|_V^2`` for j = 0..n_max under uniform random indices."""
    n_max = int(n_max)
    if n_max < 0 or n_max > MAX_STEPS:
        raise CapacityError(f"n_max must lie in [0, {MAX_STEPS}]")
    v, f = _oracle_inputs(v, cap)
    w = v.copy()
    vals = np.empty(n_max + 1)
    vals[0] = np.trace(w)
    for j in range(1, n_max + 1):
        w = _t_operator(w, v, f)
        vals[j] = np.trace(w)
    return OperatorTrace(vals, v.shape[0])


def chain_covariance(v, n, cap=ORACLE_CAP):
    """Exact ``cov(X_n)`` of the zero-start chain with uniform indices.

    ``E(M_n M_n^T)`` follows the same recursion started from I, and
    ``cov(X_n) = V - sqrt(V) E(M_n M_n^T) sqrt(V)``.
    """
    return chain_covariance_series(v, [n], cap)[int(n)]


def chain_covariance_series(v, checkpoints, cap=ORACLE_CAP):
    """``{n: cov(X_n)}`` for every n in ``checkpoints`` (one pass of the recursion)."""
    v, f = _oracle_inputs(v, cap)
    wanted = sorted({int(n) for n in checkpoints})
    if wanted and (wanted[0] < 0 or wanted[-1] > MAX_STEPS):
        raise CapacityError(f"checkpoints must lie in [0, {MAX_STEPS}]")
    out = {}
    w = np.eye(v.shape[0])
    done = 0
    for n in wanted:
        for _ in range(n - done):
            w = _t_operator(w, v, f)
        done = n
        c = v - f @ w @ f
        out[n] = 0.5 * (c + c.T)
    return out


def sample_m_norms(v, n, replications, stream=None, chunk=4096):
    """Monte Carlo values of ``|M_n|_V^2`` over random index sequences.

    Returns the ``(replications,)`` array of samples (independent of the
    T-operator recursion; used to cross-check it).
    """
    v = as_matrix(v, cap=ORACLE_CAP)
    d = v.shape[0]
    f = matrix_sqrt(v).s
    stream = stream if stream is not None else RngStream(0, 0)
    out = np.empty(replications)
    for lo in range(0, replications, chunk):
        m = min(chunk, replications - lo)
        M = np.broadcast_to(np.eye(d), (m, d, d)).copy()
        idx = stream.indices(d, (m, n))
        for t in range(n):
            fi = f[:, idx[:, t]].T  # (m, d)
            # P M = M - f (f^T M)
            M -= fi[:, :, None] * np.einsum("ri,rij->rj", fi, M)[:, None, :]
        out[lo:lo + m] = np.einsum("rij,ik,rkj->r", M, v, M)
    return out


def empirical_covariance(samples, d=None):
    """Unbiased sample covariance in a single pass.

    ``samples`` may be an ``(m, d)`` array or any iterable of d-vectors.
    """
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        acc = RunningCovariance(samples.shape[1])
        acc.update_batch(samples)
        return acc.covariance()
    acc = None
    for x in samples:
        if acc is None:
            acc = RunningCovariance(len(x) if d is None else d)
        acc.update(x)
    if acc is None:
        raise ValueError("need at least 2 samples")
    return acc.covariance()


def gaussian_w2(cov_a, cov_b, tol=PSD_TOL, cap=ORACLE_CAP * 64):
    """Quadratic Wasserstein distance between N(0, A) and N(0, B).

    ``W2^2 = tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}``.
    """
    a = as_matrix(cov_a, cap=cap)
    b = as_matrix(cov_b, cap=cap)
    if a.shape != b.shape:
        raise ValueError("covariances must have the same shape")
    _sym_eig(b, tol)
    ra = matrix_sqrt(a, tol, cap).s
    w, _ = _sym_eig(ra @ b @ ra, tol)
    val = np.trace(a) + np.trace(b) - 2.0 * np.sqrt(w).sum()
    return math.sqrt(max(val, 0.0))


# -- exp-Lipschitz certificate ----------------------------------------------------


@dataclass
class SlackReport:
    """Worst case of ``rhs - lhs`` over a grid of (nu, nu', cov)."""

    min_slack: float
    argmin: tuple
    points: int
    violations: int = 0
    worst: list = field(default_factory=list)

    @property
    def ok(self):
        return self.min_slack >= -1e-12

    def as_dict(self):
        return {
            "minSlack": self.min_slack,
            "argmin": list(self.argmin),
            "points": self.points,
            "violations": self.violations,
        }


def exp_lipschitz_sides(nu, nu_p, cov):
    """Both sides of ``E(e^X - e^X')^2 <= (nu + nu' + 1/2)(e^{2nu} + e^{2nu'}) E(X - X')^2``.

    X ~ N(0, nu), X' ~ N(0, nu') with covariance ``cov``.  The left side
    ``e^{2nu} + e^{2nu'} - 2 e^{(nu+nu')/2 + cov}`` is evaluated as
    ``2 e^{nu+nu'} (2 sinh^2((nu-nu')/2) - expm1(-rho/2))`` with
    ``rho = nu + nu' - 2 cov``, which avoids cancellation when X ~ X'.
    """
    nu, nu_p, cov = (np.asarray(a, dtype=np.float64) for a in (nu, nu_p, cov))
    if np.any(nu < 0) or np.any(nu_p < 0) or np.any(nu_p > nu):
        raise ValueError("need 0 <= nu' <= nu")
    bound = np.sqrt(nu * nu_p)
    if np.any(np.abs(cov) > bound * (1 + 1e-15) + 1e-300):
        raise ValueError("|cov| must not exceed sqrt(nu nu')")
    rho = np.maximum(nu + nu_p - 2.0 * cov, 0.0)
    half = 0.5 * (nu - nu_p)
    lhs = 2.0 * np.exp(nu + nu_p) * (2.0 * np.sinh(half) ** 2 - np.expm1(-0.5 * rho))
    rhs = (nu + nu_p + 0.5) * (np.exp(2 * nu) + np.exp(2 * nu_p)) * rho
    return lhs, rhs


def exp_lipschitz_grid(nu_max=4.0, step=0.05, cov_points=21):
    """Admissible ``(nu, nu', cov)`` triples: nu' <= nu on a grid, cov spanning
    ``[-sqrt(nu nu'), sqrt(nu nu')]`` in ``cov_points`` steps."""
    ticks = np.round(np.arange(0.0, nu_max + step / 2, step), 12)
    nu, nu_p = np.meshgrid(ticks, ticks, indexing="ij")
    keep = nu_p <= nu
    nu, nu_p = nu[keep], nu_p[keep]
    frac = np.linspace(-1.0, 1.0, cov_points)
    bound = np.sqrt(nu * nu_p)
    cov = bound[:, None] * frac[None, :]
    return (
        np.repeat(nu, cov_points),
        np.repeat(nu_p, cov_points),
        cov.ravel(),
    )


def certify_exp_lipschitz(nu, nu_p, cov):
    """Evaluate the exp-Lipschitz inequality on a grid; report the worst slack."""
    lhs, rhs = exp_lipschitz_sides(nu, nu_p, cov)
    slack = np.atleast_1d(rhs - lhs)
    k = int(np.argmin(slack))
    nu, nu_p, cov = (np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in (nu, nu_p, cov))
    return SlackReport(
        min_slack=float(slack[k]),
        argmin=(float(nu[k]), float(nu_p[k]), float(cov[k])),
        points=int(slack.size),
        violations=int(np.sum(slack < -1e-12)),
    )


# -- bound checks -----------------------------------------------------------------


def check_trace_series(trace, lam=None, tol=1e-9):
    """Check an oracle series against the d^2/n, partial-sum and geometric bounds."""
    vals = trace.values
    d = trace.d
    j = np.arange(vals.size)
    out = {
        "monotone": bool(np.all(np.diff(vals) <= 1e-12)),
        "partialSumWithinDSq": bool(np.all(trace.partial_sums() <= d * d + tol)),
        "deficitWithinDSqOverN": bool(np.all(vals[1:] <= d * d / j[1:] + tol)),
    }
    if lam is not None:
        out["geometric"] = bool(np.all(vals <= d * d * (1 - lam / d) ** j + tol))
    return out
