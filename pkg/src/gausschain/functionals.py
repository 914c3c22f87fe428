"""Test functionals h whose expectation under N(0, V) is estimated.

Built-in functionals carry a kernel encoding so the compiled backend can
evaluate them inside the chain loop; arbitrary Python callables are accepted
through :class:`PythonFunctional` at the cost of one Python call per step.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kinds import FUNC_BASKET, FUNC_CONST, FUNC_COORD, FUNC_INDICATOR, FUNC_MAX, FUNC_NORM

_EMPTY = np.zeros((0, 0))


@dataclass(frozen=True)
class Lipschitz:
    """Constants (kappa, gamma): E(h(X)-h(X'))^2 <= kappa^2 (E|X-X'|^2)^gamma."""

    kappa: float
    gamma: float = 1.0


class TestFunctional:
    """Base class for h: R^d -> R."""

    __test__ = False  # not a pytest class

    dim = None
    lipschitz = None

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._check_dim(x.shape[-1])
        return float(self.evaluate_rows(x[None, :])[0])

    def evaluate_rows(self, X):
        """Evaluate h on every row of an ``(m, d)`` array."""
        raise NotImplementedError

    def kernel_spec(self):
        """``(hkind, hval, hvec)`` for the chain kernels, or None."""
        return None

    def _check_dim(self, d):
        if self.dim is not None and d != self.dim:
            raise ValueError(f"{type(self).__name__} expects dimension {self.dim}, got {d}")

    def check_model(self, model):
        self._check_dim(model.dim)


def evaluate(h, x):
    """Evaluate ``h`` at a single vector ``x``."""
    return h(x)


class Constant(TestFunctional):
    def __init__(self, c):
        self.c = float(c)
        self.lipschitz = Lipschitz(0.0, 1.0)

    def evaluate_rows(self, X):
        return np.full(np.shape(X)[0], self.c)

    def kernel_spec(self):
        return FUNC_CONST, self.c, _EMPTY


class Coordinate(TestFunctional):
    def __init__(self, k):
        self.k = int(k)
        if self.k < 0:
            raise ValueError("coordinate index must be >= 0")
        self.lipschitz = Lipschitz(1.0, 1.0)

    def evaluate_rows(self, X):
        return np.asarray(X, dtype=np.float64)[:, self.k].copy()

    def kernel_spec(self):
        return FUNC_COORD, float(self.k), _EMPTY

    def check_model(self, model):
        if self.k >= model.dim:
            raise ValueError(f"coordinate {self.k} out of range for dimension {model.dim}")


class Max(TestFunctional):
    """``scale * max_i x_i``."""

    def __init__(self, scale=1.0):
        self.scale = float(scale)
        self.lipschitz = Lipschitz(abs(self.scale), 1.0)

    def evaluate_rows(self, X):
        return self.scale * np.asarray(X, dtype=np.float64).max(axis=1)

    def kernel_spec(self):
        return FUNC_MAX, self.scale, _EMPTY


class EuclideanNorm(TestFunctional):
    def __init__(self):
        self.lipschitz = Lipschitz(1.0, 1.0)

    def evaluate_rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.sqrt(np.einsum("ij,ij->i", X, X))

    def kernel_spec(self):
        return FUNC_NORM, 0.0, _EMPTY


class IndicatorBelow(TestFunctional):
    """``1{x_i <= a_i for all i}`` (orthant probability)."""

    def __init__(self, a):
        a = np.array(a, dtype=np.float64).ravel()
        if a.size == 0:
            raise ValueError("threshold vector must be non-empty")
        self.a = a
        self.dim = a.size
        a_hat = float(np.min(np.abs(a)))
        self.lipschitz = Lipschitz(orthant_kappa(self.dim, a_hat), 1.0 / 3.0) if a_hat > 0 else None

    def evaluate_rows(self, X):
        return np.all(np.asarray(X) <= self.a, axis=1).astype(np.float64)

    def kernel_spec(self):
        return FUNC_INDICATOR, 0.0, np.ascontiguousarray(self.a[None, :])


class BasketCall(TestFunctional):
    """Discounted-strike basket call payoff on log-normal assets.

    ``h(x) = (sum_i w_i exp(-sigma_i^2 T / 2 + sigma_i sqrt(T) x_i) - K exp(-r T))^+``

    Each term is evaluated as a single ``exp`` of its log so large
    ``sigma_i sqrt(T) x_i`` cannot overflow through the weight product.
    Weights default to ``1/d``.
    """

    def __init__(self, sigma, T=1.0, K=1.0, rate=0.0, weights=None):
        sigma = np.array(sigma, dtype=np.float64).ravel()
        d = sigma.size
        if d == 0:
            raise ValueError("need at least one asset")
        w = np.full(d, 1.0 / d) if weights is None else np.array(weights, dtype=np.float64).ravel()
        if w.shape != sigma.shape:
            raise ValueError("weights and sigma must have the same length")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if T < 0:
            raise ValueError("maturity must be non-negative")
        self.sigma, self.weights = sigma, w
        self.T, self.K, self.rate = float(T), float(K), float(rate)
        self.dim = d
        sqrt_t = math.sqrt(self.T)
        with np.errstate(divide="ignore"):
            self._log_w = np.log(w) - 0.5 * sigma**2 * self.T
        self._slope = sigma * sqrt_t
        self._strike = self.K * math.exp(-self.rate * self.T)
        # e^{s x} weighted by w e^{-sigma^2 T/2}: the kappa formula applies with
        # effective weights and vols.
        self.lipschitz = Lipschitz(
            basket_kappa(w * np.exp(-0.5 * sigma**2 * self.T), self._slope), 1.0
        )

    def evaluate_rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        total = np.exp(self._log_w + self._slope * X).sum(axis=1)
        return np.maximum(total - self._strike, 0.0)

    def kernel_spec(self):
        return FUNC_BASKET, self._strike, np.ascontiguousarray(np.vstack([self._log_w, self._slope]))


class PythonFunctional(TestFunctional):
    """Wrap an arbitrary ``f(x) -> float``."""

    def __init__(self, func, lipschitz=None, dim=None):
        self.func = func
        self.lipschitz = lipschitz
        self.dim = dim

    def evaluate_rows(self, X):
        return np.array([float(self.func(row)) for row in np.asarray(X, dtype=np.float64)])


def basket_kappa(weights, vols):
    """Lipschitz constant ``sqrt(sum w_i^2 e^{2 s_i^2} (4 s_i^2 + 1))`` of
    ``(sum w_i e^{s_i x_i} - K)^+``.

    ``vols`` are the effective per-asset slopes ``s_i`` (``sigma_i sqrt(T)``
    for a basket with maturity T).
    """
    w = np.asarray(weights, dtype=np.float64)
    s = np.asarray(vols, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    return float(np.sqrt(np.sum(w**2 * np.exp(2 * s**2) * (4 * s**2 + 1))))


def orthant_kappa(d, a_hat):
    """kappa for the orthant indicator with gamma = 1/3: ``3 (d / a_hat)^(1/3)``."""
    if a_hat <= 0:
        raise ValueError("a_hat must be positive")
    return 3.0 * (d / a_hat) ** (1.0 / 3.0)


def parse_functional(spec, d=None):
    """Parse a CLI functional spec.

    Forms: ``const:C``, ``coord:K``, ``max``, ``max:SCALE``, ``norm``,
    ``indicator:A`` (same threshold for every coordinate; needs d) or
    ``indicator:A1,A2,...``, and
    ``basket:sigma=S,T=T,K=K,r=R`` (equal weights; needs d).
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "const":
        return Constant(float(arg))
    if name == "coord":
        return Coordinate(int(arg or 0))
    if name == "max":
        return Max(_parse_scale(arg) if arg else 1.0)
    if name == "norm":
        return EuclideanNorm()
    if name == "indicator":
        vals = [float(v) for v in arg.split(",")]
        if len(vals) == 1:
            if d is None:
                raise ValueError("indicator with a scalar threshold needs d")
            vals = vals * d
        return IndicatorBelow(vals)
    if name == "basket":
        if d is None:
            raise ValueError("basket needs d")
        kw = dict(sigma=0.2, T=1.0, K=1.0, r=0.0)
        for part in filter(None, arg.split(",")):
            k, _, v = part.partition("=")
            if k not in kw:
                raise ValueError(f"unknown basket parameter {k!r}")
            kw[k] = float(v)
        return BasketCall(np.full(d, kw["sigma"]), T=kw["T"], K=kw["K"], rate=kw["r"])
    raise ValueError(f"unknown functional {spec!r}")


def _parse_scale(arg):
    arg = arg.strip()
    if arg.startswith("sqrt"):
        return math.sqrt(float(arg[4:].strip("()")))
    return float(arg)
