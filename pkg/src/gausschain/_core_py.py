"""Pure-Python (numpy) kernels.

Same API and semantics as the compiled ``_core`` module.  Results agree with
the compiled kernels to rounding (libm ``exp``/``pow`` and numpy's vectorised
versions may differ in the last ulp), not bitwise.

Model arguments are ``(kind, data, r, p)``: ``data`` is the d x d matrix for
dense models and the d x 2 location array for kernel models; ``r`` is the
range and ``p`` the exponent (powered exponential) or ratio (scaled
exponential).  Functional arguments are ``(hkind, hval, hvec)``.
"""

import math

import numpy as np

from ._kinds import (
    FUNC_BASKET,
    FUNC_CONST,
    FUNC_COORD,
    FUNC_INDICATOR,
    FUNC_MAX,
    FUNC_NORM,
    MODEL_DENSE,
    MODEL_IDENTITY,
    MODEL_POWEXP,
    MODEL_SCALEDEXP,
)

BACKEND = "python"


def fill_column(kind, data, r, p, i, out):
    """Write column ``i`` of the correlation matrix into ``out``."""
    if kind == MODEL_DENSE:
        out[:] = data[i]
    elif kind == MODEL_IDENTITY:
        out[:] = 0.0
    else:
        tmp = np.empty_like(out)
        np.subtract(data[:, 0], data[i, 0], out=out)
        np.subtract(data[:, 1], data[i, 1], out=tmp)
        out *= out
        tmp *= tmp
        out += tmp
        np.sqrt(out, out=out)
        out *= 1.0 / r
        if kind == MODEL_POWEXP:
            np.power(out, p, out=out)
            np.negative(out, out=out)
            np.exp(out, out=out)
        elif kind == MODEL_SCALEDEXP:
            np.negative(out, out=out)
            np.exp(out, out=out)
            out *= p
        else:
            raise ValueError(f"unknown model kind {kind}")
    out[i] = 1.0


def _stepper(kind, data, r, p, d):
    col = np.empty(d)
    if kind == MODEL_IDENTITY:
        def apply(xs, i, g):
            for x in xs:
                x[i] = g
        return apply

    def apply(xs, i, g):
        fill_column(kind, data, r, p, i, col)
        for x in xs:
            delta = g - x[i]
            x += delta * col
            x[i] = g
    return apply


def evaluate(hkind, hval, hvec, x):
    """Evaluate a built-in functional at ``x``."""
    if hkind == FUNC_CONST:
        return float(hval)
    if hkind == FUNC_COORD:
        return float(x[int(hval)])
    if hkind == FUNC_MAX:
        return float(hval * x.max())
    if hkind == FUNC_NORM:
        return math.sqrt(float(np.dot(x, x)))
    if hkind == FUNC_INDICATOR:
        return 1.0 if bool(np.all(x <= hvec[0])) else 0.0
    if hkind == FUNC_BASKET:
        total = float(np.exp(hvec[0] + hvec[1] * x).sum())
        return max(total - hval, 0.0)
    raise ValueError(f"unknown functional kind {hkind}")


def advance(kind, data, r, p, x, idx, g):
    """Apply ``len(idx)`` chain steps to ``x`` in place."""
    apply = _stepper(kind, data, r, p, x.shape[0])
    xs = (x,)
    for i, gg in zip(idx.tolist(), g.tolist()):
        apply(xs, i, gg)


def advance_pair(kind, data, r, p, x, y, idx, g):
    """Step two chains with common indices and variates."""
    apply = _stepper(kind, data, r, p, x.shape[0])
    xs = (x, y)
    for i, gg in zip(idx.tolist(), g.tolist()):
        apply(xs, i, gg)


def advance_sum(kind, data, r, p, x, idx, g, hkind, hval, hvec):
    """Sum of h over the visited states; h is evaluated before each step."""
    apply = _stepper(kind, data, r, p, x.shape[0])
    xs = (x,)
    total = 0.0
    for i, gg in zip(idx.tolist(), g.tolist()):
        total += evaluate(hkind, hval, hvec, x)
        apply(xs, i, gg)
    return total


def advance_pair_sum(kind, data, r, p, x, y, idx, g, hkind, hval, hvec):
    apply = _stepper(kind, data, r, p, x.shape[0])
    xs = (x, y)
    sx = sy = 0.0
    for i, gg in zip(idx.tolist(), g.tolist()):
        sx += evaluate(hkind, hval, hvec, x)
        sy += evaluate(hkind, hval, hvec, y)
        apply(xs, i, gg)
    return sx, sy


def _batch_columns(kind, data, r, p, cols_idx, d):
    if kind == MODEL_DENSE:
        return data[cols_idx]
    if kind == MODEL_IDENTITY:
        out = np.zeros((cols_idx.shape[0], d))
        return out
    dx = data[None, :, 0] - data[cols_idx, 0][:, None]
    dy = data[None, :, 1] - data[cols_idx, 1][:, None]
    dist = np.sqrt(dx * dx + dy * dy)
    dist *= 1.0 / r
    if kind == MODEL_POWEXP:
        return np.exp(-(dist ** p))
    return p * np.exp(-dist)


def advance_batch(kind, data, r, p, X, I, G):
    """Advance R independent chains; row ``k`` of X uses rows ``k`` of I and G."""
    R, d = X.shape
    rows = np.arange(R)
    for t in range(I.shape[1]):
        it = I[:, t]
        gt = G[:, t]
        cols = _batch_columns(kind, data, r, p, it, d)
        delta = gt - X[rows, it]
        X += delta[:, None] * cols
        X[rows, it] = gt
