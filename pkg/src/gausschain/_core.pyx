# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chain kernels.

API mirrors ``_core_py``.  Kernel models are evaluated entry by entry inside
the update loop, so a step touches O(d) memory and allocates nothing.
"""

from libc.math cimport exp, pow, sqrt

import numpy as np

BACKEND = "cython"

# keep in sync with _kinds.py
cdef enum:
    MODEL_DENSE = 0
    MODEL_POWEXP = 1
    MODEL_SCALEDEXP = 2
    MODEL_IDENTITY = 3

cdef enum:
    FUNC_CONST = 0
    FUNC_COORD = 1
    FUNC_MAX = 2
    FUNC_NORM = 3
    FUNC_INDICATOR = 4
    FUNC_BASKET = 5


cdef inline double _dist(const double[:, ::1] data, Py_ssize_t j,
                         double xi, double yi) noexcept nogil:
    # locations are planar and bounded, so hypot's overflow guard is not needed
    cdef double dx = data[j, 0] - xi
    cdef double dy = data[j, 1] - yi
    return sqrt(dx * dx + dy * dy)


cdef inline void _step(int kind, const double[:, ::1] data, double r, double p,
                       double[::1] x, Py_ssize_t i, double g) noexcept nogil:
    cdef Py_ssize_t j, d = x.shape[0]
    cdef double delta = g - x[i]
    cdef double xi, yi, inv_r
    if kind == MODEL_DENSE:
        for j in range(d):
            x[j] += delta * data[i, j]
    elif kind == MODEL_SCALEDEXP:
        xi = data[i, 0]
        yi = data[i, 1]
        inv_r = 1.0 / r
        for j in range(d):
            x[j] += delta * (p * exp(-_dist(data, j, xi, yi) * inv_r))
    elif kind == MODEL_POWEXP:
        xi = data[i, 0]
        yi = data[i, 1]
        inv_r = 1.0 / r
        for j in range(d):
            x[j] += delta * exp(-pow(_dist(data, j, xi, yi) * inv_r, p))
    x[i] = g


cdef inline void _step2(int kind, const double[:, ::1] data, double r, double p,
                        double[::1] x, double[::1] y, Py_ssize_t i, double g) noexcept nogil:
    cdef Py_ssize_t j, d = x.shape[0]
    cdef double dx = g - x[i]
    cdef double dy = g - y[i]
    cdef double c, xi, yi, inv_r
    if kind == MODEL_DENSE:
        for j in range(d):
            c = data[i, j]
            x[j] += dx * c
            y[j] += dy * c
    elif kind == MODEL_SCALEDEXP:
        xi = data[i, 0]
        yi = data[i, 1]
        inv_r = 1.0 / r
        for j in range(d):
            c = p * exp(-_dist(data, j, xi, yi) * inv_r)
            x[j] += dx * c
            y[j] += dy * c
    elif kind == MODEL_POWEXP:
        xi = data[i, 0]
        yi = data[i, 1]
        inv_r = 1.0 / r
        for j in range(d):
            c = exp(-pow(_dist(data, j, xi, yi) * inv_r, p))
            x[j] += dx * c
            y[j] += dy * c
    x[i] = g
    y[i] = g


cdef inline double _eval(int hkind, double hval, const double[:, ::1] hvec,
                         const double[::1] x) noexcept nogil:
    cdef Py_ssize_t j, d = x.shape[0]
    cdef double acc
    if hkind == FUNC_CONST:
        return hval
    elif hkind == FUNC_COORD:
        return x[<Py_ssize_t> hval]
    elif hkind == FUNC_MAX:
        acc = x[0]
        for j in range(1, d):
            if x[j] > acc:
                acc = x[j]
        return hval * acc
    elif hkind == FUNC_NORM:
        acc = 0.0
        for j in range(d):
            acc += x[j] * x[j]
        return sqrt(acc)
    elif hkind == FUNC_INDICATOR:
        for j in range(d):
            if not (x[j] <= hvec[0, j]):
                return 0.0
        return 1.0
    elif hkind == FUNC_BASKET:
        acc = 0.0
        for j in range(d):
            acc += exp(hvec[0, j] + hvec[1, j] * x[j])
        acc -= hval
        return acc if acc > 0.0 else 0.0
    return 0.0


def _check_kind(int kind):
    if kind < 0 or kind > 3:
        raise ValueError(f"unknown model kind {kind}")


def _check_hkind(int hkind):
    if hkind < 0 or hkind > 5:
        raise ValueError(f"unknown functional kind {hkind}")


def fill_column(int kind, const double[:, ::1] data, double r, double p,
                Py_ssize_t i, double[::1] out):
    _check_kind(kind)
    cdef Py_ssize_t j, d = out.shape[0]
    cdef double xi, yi, inv_r = 1.0 / r
    with nogil:
        if kind == MODEL_DENSE:
            for j in range(d):
                out[j] = data[i, j]
        elif kind == MODEL_IDENTITY:
            for j in range(d):
                out[j] = 0.0
        else:
            xi = data[i, 0]
            yi = data[i, 1]
            for j in range(d):
                if kind == MODEL_SCALEDEXP:
                    out[j] = p * exp(-_dist(data, j, xi, yi) * inv_r)
                else:
                    out[j] = exp(-pow(_dist(data, j, xi, yi) * inv_r, p))
        out[i] = 1.0


def evaluate(int hkind, double hval, const double[:, ::1] hvec, const double[::1] x):
    _check_hkind(hkind)
    return _eval(hkind, hval, hvec, x)


def advance(int kind, const double[:, ::1] data, double r, double p,
            double[::1] x, const long long[::1] idx, const double[::1] g):
    _check_kind(kind)
    cdef Py_ssize_t t, m = idx.shape[0]
    with nogil:
        for t in range(m):
            _step(kind, data, r, p, x, idx[t], g[t])


def advance_pair(int kind, const double[:, ::1] data, double r, double p,
                 double[::1] x, double[::1] y,
                 const long long[::1] idx, const double[::1] g):
    _check_kind(kind)
    cdef Py_ssize_t t, m = idx.shape[0]
    with nogil:
        for t in range(m):
            _step2(kind, data, r, p, x, y, idx[t], g[t])


def advance_sum(int kind, const double[:, ::1] data, double r, double p,
                double[::1] x, const long long[::1] idx, const double[::1] g,
                int hkind, double hval, const double[:, ::1] hvec):
    _check_kind(kind)
    _check_hkind(hkind)
    cdef Py_ssize_t t, m = idx.shape[0]
    cdef double total = 0.0
    with nogil:
        for t in range(m):
            total += _eval(hkind, hval, hvec, x)
            _step(kind, data, r, p, x, idx[t], g[t])
    return total


def advance_pair_sum(int kind, const double[:, ::1] data, double r, double p,
                     double[::1] x, double[::1] y,
                     const long long[::1] idx, const double[::1] g,
                     int hkind, double hval, const double[:, ::1] hvec):
    _check_kind(kind)
    _check_hkind(hkind)
    cdef Py_ssize_t t, m = idx.shape[0]
    cdef double sx = 0.0, sy = 0.0
    with nogil:
        for t in range(m):
            sx += _eval(hkind, hval, hvec, x)
            sy += _eval(hkind, hval, hvec, y)
            _step2(kind, data, r, p, x, y, idx[t], g[t])
    return sx, sy


def advance_batch(int kind, const double[:, ::1] data, double r, double p,
                  double[:, ::1] X, const long long[:, ::1] I, const double[:, ::1] G):
    _check_kind(kind)
    cdef Py_ssize_t k, t, R = X.shape[0], m = I.shape[1]
    with nogil:
        for k in range(R):
            for t in range(m):
                _step(kind, data, r, p, X[k], I[k, t], G[k, t])
