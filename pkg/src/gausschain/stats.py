"""Single-pass mean / variance / covariance accumulators (Welford, Chan merge)."""

import math

import numpy as np


class RunningStats:
    """Streaming mean and variance of scalars."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    def update_batch(self, xs):
        xs = np.asarray(xs, dtype=np.float64).ravel()
        if xs.size == 0:
            return
        nb = xs.size
        mb = float(xs.mean())
        m2b = float(((xs - mb) ** 2).sum())
        self._merge(nb, mb, m2b)

    def _merge(self, nb, mb, m2b):
        na = self.count
        n = na + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self._m2 += m2b + delta * delta * na * nb / n
        self.count = n

    def merge(self, other):
        if other.count:
            self._merge(other.count, other.mean, other._m2)
        return self

    def var(self, ddof=1):
        if self.count <= ddof:
            return math.nan
        return max(self._m2, 0.0) / (self.count - ddof)

    def std(self, ddof=1):
        return math.sqrt(self.var(ddof))

    def stderr(self):
        return math.sqrt(self.var() / self.count)


class RunningCovariance:
    """Streaming unbiased sample covariance of d-vectors."""

    def __init__(self, d):
        self.d = int(d)
        self.count = 0
        self.mean = np.zeros(self.d)
        self._c = np.zeros((self.d, self.d))

    def update(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._c += np.outer(delta, x - self.mean)

    def update_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        nb = X.shape[0]
        if nb == 0:
            return
        mb = X.mean(axis=0)
        Xc = X - mb
        cb = Xc.T @ Xc
        na = self.count
        n = na + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self._c += cb + np.outer(delta, delta) * (na * nb / n)
        self.count = n

    def covariance(self):
        if self.count < 2:
            raise ValueError("need at least 2 samples")
        c = self._c / (self.count - 1)
        return 0.5 * (c + c.T)
