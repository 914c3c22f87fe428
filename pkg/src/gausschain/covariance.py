"""Correlation-matrix models with O(d) column access.

Kernel models keep only their d planar locations and recompute entries on
demand, so a column costs O(d) time and no d x d matrix is ever stored.
Dense models wrap an explicit matrix for small problems and tests.

JSON descriptor format::

    {"type": "dense" | "powexp" | "scaledexp" | "identity",
     "d": int, "values": [...], "locations": [[x, y], ...],
     "r": float, "theta": float, "ratio": float}

``values`` is the row-major dense matrix (flat or nested).
"""

import json
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._kinds import MODEL_DENSE, MODEL_IDENTITY, MODEL_POWEXP, MODEL_SCALEDEXP
from .errors import CapacityError

log = logging.getLogger(__name__)

SYM_TOL = 1e-10
VALIDATE_CAP = 2048


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class CovarianceModel:
    """Base class: a d x d correlation matrix accessed by entries and columns.

    Subclasses are immutable once constructed and safe to share read-only
    between threads.
    """

    kind = None

    @property
    def dim(self):
        return self._d

    def entry(self, i, j):
        raise NotImplementedError

    def _kernel_args(self):
        """Return ``(kind, data, r, p)`` for the chain kernels."""
        raise NotImplementedError

    def to_descriptor(self):
        raise NotImplementedError

    def _check_index(self, i):
        i = int(i)
        if not 0 <= i < self._d:
            raise IndexError(f"index {i} out of range for dimension {self._d}")
        return i

    def column(self, i, out=None):
        """Return ``V e_i`` in O(d) time.

        Parameters
        ----------
        i : int
            Column index in ``[0, d)``.
        out : ndarray, optional
            Buffer of length d to write into.
        """
        i = self._check_index(i)
        if out is None:
            out = np.empty(self._d)
        kind, data, r, p = self._kernel_args()
        _backend.get().fill_column(kind, data, r, p, i, out)
        return out

    def materialize(self, cap=None):
        """Return the full d x d matrix (only sensible for moderate d)."""
        if cap is not None and self._d > cap:
            raise CapacityError(f"d={self._d} exceeds the materialization cap {cap}")
        return self._materialize()

    def _materialize(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(d={self._d})"


class IdentityCorrelation(CovarianceModel):
    kind = MODEL_IDENTITY

    def __init__(self, d):
        if int(d) < 1:
            raise ValueError("d must be >= 1")
        self._d = int(d)
        self._data = _readonly(np.zeros((0, 2)))

    def entry(self, i, j):
        return 1.0 if self._check_index(i) == self._check_index(j) else 0.0

    def _kernel_args(self):
        return MODEL_IDENTITY, self._data, 1.0, 0.0

    def _materialize(self):
        return np.eye(self._d)

    def to_descriptor(self):
        return {"type": "identity", "d": self._d}


class DenseCorrelation(CovarianceModel):
    """Explicit correlation matrix.

    Inputs whose asymmetry exceeds ``sym_tol`` are replaced by ``(V + V^T)/2``
    with a warning; smaller asymmetry is accepted as-is.
    """

    kind = MODEL_DENSE

    def __init__(self, values, sym_tol=SYM_TOL):
        v = np.array(values, dtype=np.float64)
        if v.ndim == 1:
            d = math.isqrt(v.size)
            if d * d != v.size:
                raise ValueError(f"{v.size} values do not form a square matrix")
            v = v.reshape(d, d)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix has non-finite entries")
        asym = float(np.max(np.abs(v - v.T)))
        if asym > sym_tol:
            warnings.warn(
                f"correlation matrix asymmetric by {asym:.2e}; symmetrizing",
                RuntimeWarning,
                stacklevel=2,
            )
            v = 0.5 * (v + v.T)
        self._d = v.shape[0]
        self._values = _readonly(v)
        self.sym_tol = sym_tol

    @property
    def values(self):
        return self._values

    def entry(self, i, j):
        return float(self._values[self._check_index(i), self._check_index(j)])

    def _kernel_args(self):
        return MODEL_DENSE, self._values, 1.0, 0.0

    def _materialize(self):
        return np.array(self._values)

    def to_descriptor(self):
        return {"type": "dense", "d": self._d, "values": self._values.ravel().tolist()}


class _LocationKernel(CovarianceModel):
    def __init__(self, locations, r):
        loc = np.array(locations, dtype=np.float64)
        if loc.ndim != 2 or loc.shape[1] != 2 or loc.shape[0] == 0:
            raise ValueError(f"locations must be a non-empty (d, 2) array, got {loc.shape}")
        if not np.all(np.isfinite(loc)):
            raise ValueError("locations must be finite")
        if not r > 0:
            raise ValueError("range r must be positive")
        self._d = loc.shape[0]
        self._locations = _readonly(loc)
        self.r = float(r)

    @property
    def locations(self):
        return self._locations

    def _distance(self, i, j):
        a = self._locations[i]
        b = self._locations[j]
        return math.hypot(a[0] - b[0], a[1] - b[1])

    def _distances(self):
        loc = self._locations
        return np.hypot(loc[:, None, 0] - loc[None, :, 0], loc[:, None, 1] - loc[None, :, 1])


class PoweredExponentialKernel(_LocationKernel):
    """``V_ij = exp(-(|s_i - s_j| / r)^theta)`` with ``0 < theta <= 2``."""

    kind = MODEL_POWEXP

    def __init__(self, locations, r, theta):
        super().__init__(locations, r)
        if not 0 < theta <= 2:
            raise ValueError("theta must lie in (0, 2]")
        self.theta = float(theta)

    def entry(self, i, j):
        i, j = self._check_index(i), self._check_index(j)
        if i == j:
            return 1.0
        return math.exp(-((self._distance(i, j) / self.r) ** self.theta))

    def _kernel_args(self):
        return MODEL_POWEXP, self._locations, self.r, self.theta

    def _materialize(self):
        v = np.exp(-((self._distances() / self.r) ** self.theta))
        np.fill_diagonal(v, 1.0)
        return v

    def to_descriptor(self):
        return {
            "type": "powexp",
            "d": self._d,
            "locations": self._locations.tolist(),
            "r": self.r,
            "theta": self.theta,
        }


class ScaledExponentialKernel(_LocationKernel):
    """Nugget-style exponential correlation.

    Off-diagonal ``V_ij = ratio * exp(-|s_i - s_j| / r)``, unit diagonal.  With
    ``ratio = sigma^2 / varrho`` this is the correlation of a field with
    variance ``varrho`` and covariance ``sigma^2 exp(-dist / r)``; the
    smallest eigenvalue is at least ``1 - ratio``.
    """

    kind = MODEL_SCALEDEXP

    def __init__(self, locations, r, ratio):
        super().__init__(locations, r)
        if not 0 < ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        self.ratio = float(ratio)

    @property
    def eigenvalue_floor(self):
        return 1.0 - self.ratio

    def entry(self, i, j):
        i, j = self._check_index(i), self._check_index(j)
        if i == j:
            return 1.0
        return self.ratio * math.exp(-self._distance(i, j) / self.r)

    def _kernel_args(self):
        return MODEL_SCALEDEXP, self._locations, self.r, self.ratio

    def _materialize(self):
        v = self.ratio * np.exp(-self._distances() / self.r)
        np.fill_diagonal(v, 1.0)
        return v

    def to_descriptor(self):
        return {
            "type": "scaledexp",
            "d": self._d,
            "locations": self._locations.tolist(),
            "r": self.r,
            "ratio": self.ratio,
        }


def grid_locations(d):
    """Place d points on a square grid in ``[0, 1)^2``.

    Point ``i`` is ``(floor(i / k) / k, (i mod k) / k)`` with ``k = ceil(sqrt(d))``.
    """
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    k = math.isqrt(d - 1) + 1  # ceil(sqrt(d)) without float rounding
    i = np.arange(d)
    return np.column_stack([(i // k) / k, (i % k) / k])


def temperature_model(d, r=10.0, variance=8.0, sill=7.44):
    """Scaled-exponential model on :func:`grid_locations` (temperature-field setup)."""
    return ScaledExponentialKernel(grid_locations(d), r, sill / variance)


@dataclass(frozen=True)
class ValidationReport:
    symmetric: bool
    unit_diagonal: bool
    min_eigenvalue: float

    @property
    def ok(self):
        return self.symmetric and self.unit_diagonal

    def as_dict(self):
        return {
            "symmetric": self.symmetric,
            "unitDiagonal": self.unit_diagonal,
            "minEigenvalue": self.min_eigenvalue,
        }


def validate(model, tol=SYM_TOL, cap=VALIDATE_CAP):
    """Check symmetry and unit diagonal, and compute the smallest eigenvalue.

    Materializes V, so ``model.dim`` must not exceed ``cap``.
    """
    v = as_matrix(model, cap=cap)
    symmetric = bool(np.max(np.abs(v - v.T)) <= tol)
    unit_diag = bool(np.max(np.abs(np.diag(v) - 1.0)) <= tol)
    lam = float(np.linalg.eigvalsh(0.5 * (v + v.T))[0])
    return ValidationReport(symmetric, unit_diag, lam)


def _as_square(v, cap):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {v.shape}")
    if cap is not None and v.shape[0] > cap:
        raise CapacityError(f"d={v.shape[0]} exceeds the materialization cap {cap}")
    return v


def as_matrix(model_or_matrix, cap=None):
    """Dense ndarray view of a model or array-like, honoring ``cap``."""
    if isinstance(model_or_matrix, CovarianceModel):
        return model_or_matrix.materialize(cap=cap)
    return _as_square(model_or_matrix, cap)


def from_descriptor(desc):
    """Build a model from a JSON-style descriptor dict."""
    kind = desc.get("type")
    d = desc.get("d")
    if kind == "identity":
        if d is None:
            raise ValueError("identity descriptor needs 'd'")
        return IdentityCorrelation(d)
    if kind == "dense":
        model = DenseCorrelation(desc["values"])
    elif kind in ("powexp", "scaledexp"):
        locations = desc.get("locations")
        if locations is None:
            if d is None:
                raise ValueError(f"{kind} descriptor needs 'locations' or 'd'")
            locations = grid_locations(d)
        if kind == "powexp":
            model = PoweredExponentialKernel(locations, desc.get("r", 1.0), desc.get("theta", 1.0))
        else:
            model = ScaledExponentialKernel(locations, desc.get("r", 10.0), desc.get("ratio", 7.44 / 8.0))
    else:
        raise ValueError(f"unknown model type {kind!r}")
    if d is not None and model.dim != int(d):
        raise ValueError(f"descriptor says d={d} but the model has dimension {model.dim}")
    return model


def load_model(path):
    with open(path) as fh:
        return from_descriptor(json.load(fh))


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_descriptor(), fh)
