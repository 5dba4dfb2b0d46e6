# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch kernels.

Each branch mirrors the scalar reference in ``tssr.catalog`` operation for
operation and calls the same libm functions CPython's ``math`` module wraps,
so results agree bit for bit. Do not reassociate expressions here.
"""
import numpy as np

from libc.math cimport exp, expm1, log1p, tanh, erf, sqrt, fabs, copysign
from libc.string cimport memcpy
from libc.stdint cimport int64_t

cdef enum:
    SIGMOID = 0
    RELU = 1
    PRELU = 2
    ELU = 3
    SWISH = 4
    TANH = 5
    SOFTSIGN = 6
    SOFTMAX_REDUCED = 7
    SRS = 8
    SERF = 9
    MISH = 10
    TSSR = 11

cdef double TWO_OVER_SQRT_PI = 2.0 / sqrt(3.141592653589793)
cdef int64_t MAGIC = 0x5FE6EB50C7B537A9


cdef inline double _sigmoid(double x) nogil:
    cdef double z = exp(-fabs(x))
    if x >= 0.0:
        return 1.0 / (1.0 + z)
    return z / (1.0 + z)


cdef inline double _softplus(double x) nogil:
    cdef double pos = x if x > 0.0 else 0.0
    return pos + log1p(exp(-fabs(x)))


cdef inline double _fwd(int kind, double a, double b, double x) nogil:
    cdef double ax, e, r, z
    if kind == TSSR:
        ax = fabs(x)
        if ax <= 1.0:
            return x
        # x is nonzero here, so copysign matches sign(x) * (...) exactly
        return copysign(2.0 * sqrt(ax) - 1.0, x)
    if kind == SIGMOID or kind == SOFTMAX_REDUCED:
        return _sigmoid(x)
    if kind == RELU:
        return x if x > 0.0 else 0.0
    if kind == PRELU:
        return x if x > 0.0 else a * x
    if kind == ELU:
        return x if x > 0.0 else a * expm1(x)
    if kind == SWISH:
        return x * _sigmoid(x)
    if kind == TANH:
        return tanh(x)
    if kind == SOFTSIGN:
        return x / (fabs(x) + 1.0)
    if kind == SRS:
        if x >= 0.0:
            e = exp(-x / b)
            return x / (x / a + e)
        r = exp(x / b)
        return x * r / (x * r / a + 1.0)
    if kind == SERF:
        return x * erf(_softplus(x))
    if kind == MISH:
        return x * tanh(_softplus(x))
    return 0.0


cdef inline double _grd(int kind, double a, double b, double x) nogil:
    cdef double ax, e, r, d, z, t, sp
    if kind == TSSR:
        ax = fabs(x)
        if ax <= 1.0:
            return 1.0
        return 1.0 / sqrt(ax)
    if kind == SIGMOID or kind == SOFTMAX_REDUCED:
        z = exp(-fabs(x))
        return z / ((1.0 + z) * (1.0 + z))
    if kind == RELU:
        return 1.0 if x >= 0.0 else 0.0
    if kind == PRELU:
        return 1.0 if x >= 0.0 else a
    if kind == ELU:
        return 1.0 if x >= 0.0 else a * exp(x)
    if kind == SWISH:
        return _sigmoid(x) * (1.0 + x * _sigmoid(-x))
    if kind == TANH:
        z = exp(-2.0 * fabs(x))
        return 4.0 * z / ((1.0 + z) * (1.0 + z))
    if kind == SOFTSIGN:
        d = fabs(x) + 1.0
        return 1.0 / (d * d)
    if kind == SRS:
        if x >= 0.0:
            e = exp(-x / b)
            if e == 0.0:
                return 0.0
            d = x / a + e
            return e * (1.0 + x / b) / (d * d)
        r = exp(x / b)
        if r == 0.0:
            return 0.0
        d = x * r / a + 1.0
        return r * (1.0 + x / b) / (d * d)
    if kind == SERF:
        sp = _softplus(x)
        return erf(sp) + x * (TWO_OVER_SQRT_PI * exp(-sp * sp) * _sigmoid(x))
    if kind == MISH:
        t = tanh(_softplus(x))
        return t + x * ((1.0 - t * t) * _sigmoid(x))
    return 0.0


def forward(int kind, double alpha, double beta, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _fwd(kind, alpha, beta, x[i])
    return out


def grad(int kind, double alpha, double beta, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _grd(kind, alpha, beta, x[i])
    return out


cdef inline double _rsqrt_approx(double a) nogil:
    cdef int64_t bits
    cdef double y, e
    memcpy(&bits, &a, 8)
    bits = MAGIC - (bits >> 1)
    memcpy(&y, &bits, 8)
    e = 1.0 - a * y * y
    return y * (1.0 + e * (0.5 + e * (0.375 + 0.3125 * e)))


def rsqrt_approx(const double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _rsqrt_approx(a[i])
    return out


def tssr_forward_approx(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double v, ax
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            v = x[i]
            ax = fabs(v)
            if ax <= 1.0:
                o[i] = v
            else:
                o[i] = copysign(2.0 * (ax * _rsqrt_approx(ax)) - 1.0, v)
    return out
