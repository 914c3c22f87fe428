"""Seeded, splittable random streams.

Every stream is identified by ``(seed, stream_id)``.  The pair is hashed by
:class:`numpy.random.SeedSequence` (an avalanche-quality mixer), so replication
``r`` can use ``stream_id=r`` without any coordination between workers.

A stream owns two independent lanes: one for Gaussian variates and one for
indices.  Drawing from one lane never shifts the other, which keeps chains
reproducible regardless of how index and Gaussian draws are interleaved.
"""

import numpy as np

_U64 = 1 << 64

_LANE_GAUSS = 0
_LANE_INDEX = 1
_LANE_CHILD = 2


def _check_u64(value, name):
    value = int(value)
    if not 0 <= value < _U64:
        raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
    return value


class RngStream:
    """Reproducible source of N(0,1) variates and uniform indices.

    Gaussians come from numpy's ziggurat sampler; indices from its bounded
    integer sampler, which rejects to avoid modulo bias.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    stream_id : int
        64-bit unsigned stream (replication) identifier.
    """

    def __init__(self, seed=0, stream_id=0, _path=()):
        self.seed = _check_u64(seed, "seed")
        self.stream_id = _check_u64(stream_id, "stream_id")
        self._path = tuple(_path)
        self._gauss = self._lane(_LANE_GAUSS)
        self._index = self._lane(_LANE_INDEX)

    def _lane(self, lane):
        key = (self.stream_id,) + self._path + (lane,)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, tag):
        """Return a stream independent of this one and of its other children."""
        return RngStream(self.seed, self.stream_id, self._path + (_LANE_CHILD, int(tag)))

    def next_gaussian(self):
        return float(self._gauss.standard_normal())

    def next_index(self, d):
        if d < 1:
            raise ValueError("d must be >= 1")
        return int(self._index.integers(0, d))

    def gaussians(self, size):
        """Draw a block of N(0,1) variates (any numpy shape)."""
        return self._gauss.standard_normal(size)

    def indices(self, d, size):
        """Draw a block of indices uniform on ``{0, ..., d-1}``."""
        if d < 1:
            raise ValueError("d must be >= 1")
        return self._index.integers(0, d, size=size, dtype=np.int64)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
