"""The O(d) Markov chain for N(0, V).

One step refreshes a single coordinate and drags the others along column
``i`` of V::

    x <- x + (g - x[i]) * V[:, i]

so ``x[i] == g`` afterwards (the update writes it exactly).  Starting from
zero, the law of the n-th state converges to N(0, V); started from an exact
N(0, V) draw, the chain stays exactly N(0, V).

Runs draw indices and variates in fixed-size blocks and hand each block to
the kernel backend, so the trajectory is never stored.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NumericError
from .rng import RngStream

BLOCK = 4096


@dataclass
class ChainState:
    """Current vector ``x`` and number of steps taken ``n``."""

    x: np.ndarray
    n: int = 0

    @classmethod
    def zeros(cls, d):
        return cls(np.zeros(int(d)), 0)

    def copy(self):
        return ChainState(self.x.copy(), self.n)


@dataclass(frozen=True)
class StepRecord:
    n: int
    i: int
    g: float


class UniformRandom:
    """i.i.d. uniform indices drawn from ``stream``'s index lane."""

    def __init__(self, stream, d):
        self.stream = stream
        self.d = int(d)

    def take(self, k):
        return self.stream.indices(self.d, k)


class DeterministicCycle:
    """Emit ``order[n mod d]`` for n = 0, 1, 2, ...

    No accuracy guarantee is claimed for deterministic orders.
    """

    def __init__(self, order):
        order = np.asarray(order, dtype=np.int64)
        d = order.size
        if d == 0 or not np.array_equal(np.sort(order), np.arange(d)):
            raise ValueError("order must be a permutation of 0..d-1")
        self.order = order
        self.d = d
        self._pos = 0

    def take(self, k):
        out = np.take(self.order, np.arange(self._pos, self._pos + k) % self.d)
        self._pos = (self._pos + k) % self.d
        return out


def make_schedule(schedule, stream, d):
    """Normalize ``schedule`` (None, "uniform", "cycle", or an object with ``take``)."""
    if schedule is None or schedule == "uniform":
        return UniformRandom(stream, d)
    if schedule == "cycle":
        return DeterministicCycle(np.arange(d))
    return schedule


def _start(model, x0):
    d = model.dim
    if x0 is None:
        return np.zeros(d)
    x = np.array(x0, dtype=np.float64)
    if x.shape != (d,):
        raise ValueError(f"x0 must have length {d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("x0 has non-finite entries")
    return x


def _ensure_finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise NumericError("chain state became non-finite")


def blocks(schedule, stream, n, block=BLOCK):
    """Yield ``(indices, gaussians)`` blocks covering n steps."""
    done = 0
    while done < n:
        k = min(block, n - done)
        yield np.ascontiguousarray(schedule.take(k), dtype=np.int64), stream.gaussians(k)
        done += k


def step(state, model, i, g):
    """Advance ``state`` by one step in place and return it.

    Raises
    ------
    NumericError
        If ``g`` or the refreshed coordinate is not finite.
    IndexError
        If ``i`` is outside ``[0, d)``.
    """
    i = model._check_index(i)
    g = float(g)
    if not (math.isfinite(g) and math.isfinite(state.x[i])):
        raise NumericError(f"non-finite input at step {state.n} (g={g}, x[i]={state.x[i]})")
    kind, data, r, p = model._kernel_args()
    _backend.get().advance(
        kind, data, r, p, state.x, np.array([i], dtype=np.int64), np.array([g])
    )
    state.n += 1
    return state


def replay(model, records, x0=None):
    """Re-run a chain from logged ``(n, i, g)`` records."""
    state = ChainState(_start(model, x0), 0)
    for rec in records:
        step(state, model, rec.i, rec.g)
    return state


def run(model, schedule=None, stream=None, n=0, x0=None, visitor=None, log=None):
    """Run n steps from ``x0`` (zero by default).

    Parameters
    ----------
    model : CovarianceModel
    schedule : None, "uniform", "cycle" or schedule object
        Index source.  ``None`` draws uniform indices from ``stream``.
    stream : RngStream
        Source of the Gaussian variates (and of uniform indices by default).
    n : int
        Number of steps.
    x0 : array_like, optional
    visitor : callable, optional
        Called as ``visitor(n, state)`` after every step.  Slower: it forces
        one kernel call per step.
    log : StepLog, optional
        Receives every ``(n, i, g)`` for replay.

    Returns
    -------
    ChainState
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    stream = stream if stream is not None else RngStream()
    schedule = make_schedule(schedule, stream, model.dim)
    state = ChainState(_start(model, x0), 0)
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    for idx, g in blocks(schedule, stream, n):
        if log is not None:
            log.extend(state.n, idx, g)
        if visitor is None:
            core.advance(kind, data, r, p, state.x, idx, g)
            state.n += idx.size
        else:
            for t in range(idx.size):
                core.advance(kind, data, r, p, state.x, idx[t:t + 1], g[t:t + 1])
                state.n += 1
                visitor(state.n, state)
        _ensure_finite(state.x)
    return state


def iter_checkpoints(model, checkpoints, schedule=None, stream=None, x0=None):
    """Yield ``(n, x)`` copies of the state at each requested step count.

    ``checkpoints`` must be non-decreasing; the chain itself is advanced once.
    """
    stream = stream if stream is not None else RngStream()
    schedule = make_schedule(schedule, stream, model.dim)
    x = _start(model, x0)
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    done = 0
    for target in checkpoints:
        target = int(target)
        if target < done:
            raise ValueError("checkpoints must be non-decreasing")
        for idx, g in blocks(schedule, stream, target - done):
            core.advance(kind, data, r, p, x, idx, g)
            _ensure_finite(x)
        done = target
        yield done, x.copy()


def run_coupled(model, schedule=None, stream=None, n=0, x0_exact=None, visitor=None):
    """Run a chain from zero and a chain from ``x0_exact`` on common randomness.

    When ``x0_exact`` is an exact N(0, V) draw the second chain stays exactly
    N(0, V) at every step.

    Returns
    -------
    (ChainState, ChainState)
        Zero-start chain and exact-start chain.  ``visitor(n, a, b)`` is
        called after every step if given.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    stream = stream if stream is not None else RngStream()
    schedule = make_schedule(schedule, stream, model.dim)
    a = ChainState(np.zeros(model.dim), 0)
    b = ChainState(_start(model, x0_exact), 0)
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    for idx, g in blocks(schedule, stream, n):
        if visitor is None:
            core.advance_pair(kind, data, r, p, a.x, b.x, idx, g)
            a.n += idx.size
            b.n += idx.size
        else:
            for t in range(idx.size):
                core.advance_pair(kind, data, r, p, a.x, b.x, idx[t:t + 1], g[t:t + 1])
                a.n += 1
                b.n += 1
                visitor(a.n, a, b)
        _ensure_finite(a.x, b.x)
    return a, b


def run_batch(model, n, replications, stream, x0=None, chunk=8192):
    """Final states of many independent chains, as an ``(R, d)`` array.

    All chains draw from ``stream`` chunk by chunk, which is much faster than
    one stream per chain when R is large.

    Parameters
    ----------
    x0 : None, "exact" or array_like
        Zero start (default), exact N(0, V) starts from a Cholesky factor of
        V, or a fixed ``(d,)`` / ``(R, d)`` start.
    """
    d = model.dim
    kind, data, r, p = model._kernel_args()
    core = _backend.get()
    factor = None
    if isinstance(x0, str):
        if x0 != "exact":
            raise ValueError(f"unknown start {x0!r}")
        from .baseline import cholesky

        factor = cholesky(model)
    out = np.empty((replications, d))
    for lo in range(0, replications, chunk):
        hi = min(lo + chunk, replications)
        m = hi - lo
        if factor is not None:
            X = stream.gaussians((m, d)) @ factor.a.T
        elif x0 is None:
            X = np.zeros((m, d))
        else:
            x0a = np.asarray(x0, dtype=np.float64)
            X = np.array(np.broadcast_to(x0a if x0a.ndim == 1 else x0a[lo:hi], (m, d)))
        X = np.ascontiguousarray(X)
        I = np.ascontiguousarray(stream.indices(d, (m, n)))
        G = np.ascontiguousarray(stream.gaussians((m, n)))
        core.advance_batch(kind, data, r, p, X, I, G)
        out[lo:hi] = X
    _ensure_finite(out)
    return out


class StepLog:
    """CSV log of ``n,i,g`` rows, usable as the ``log`` argument of :func:`run`."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(["n", "i", "g"])

    def extend(self, n0, idx, g):
        self._w.writerows(
            (n0 + t, int(i), repr(float(gg))) for t, (i, gg) in enumerate(zip(idx, g))
        )

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MemoryLog:
    """In-memory step log (tests, short runs)."""

    def __init__(self):
        self.records = []

    def extend(self, n0, idx, g):
        self.records.extend(
            StepRecord(n0 + t, int(i), float(gg)) for t, (i, gg) in enumerate(zip(idx, g))
        )


def read_step_log(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [StepRecord(int(row["n"]), int(row["i"]), float(row["g"])) for row in reader]
