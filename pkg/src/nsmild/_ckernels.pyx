# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled inner loops. Mirrors ``_pykernels`` one-for-one."""

from libc.math cimport exp, expm1, pow, sqrt, fabs

import numpy as np

DEF SERIES_CUTOFF = 1.0
DEF SERIES_TERMS = 20


cdef inline void _phi12(double z, double *phi1, double *phi2) noexcept nogil:
    # phi1(-z) = (1 - e^-z)/z, phi2(-z) = (e^-z - 1 + z)/z^2
    cdef double t1, t2, term, fact1, fact2
    cdef int n
    if z < SERIES_CUTOFF:
        t1 = 0.0
        t2 = 0.0
        term = 1.0
        fact1 = 1.0
        fact2 = 2.0
        for n in range(SERIES_TERMS):
            t1 += term / fact1
            t2 += term / fact2
            term *= -z
            fact1 *= n + 2
            fact2 *= n + 3
        phi1[0] = t1
        phi2[0] = t2
    else:
        t1 = -expm1(-z)
        phi1[0] = t1 / z
        phi2[0] = (z - t1) / (z * z)


def etd_weights(const double[::1] lam, double h, double[::1] decay,
                double[::1] w_left, double[::1] w_right):
    cdef Py_ssize_t i, n = lam.shape[0]
    cdef double z, p1, p2
    with nogil:
        for i in range(n):
            z = lam[i] * h
            _phi12(z, &p1, &p2)
            decay[i] = exp(-z)
            w_left[i] = h * (p1 - p2)
            w_right[i] = h * p2


def etd_accumulate(double complex[:, ::1] acc, const double[::1] decay,
                   const double[::1] w_left, const double[::1] w_right,
                   const double complex[:, ::1] left,
                   const double complex[:, ::1] right):
    # real weights times complex data: work on the interleaved (re, im) doubles
    cdef Py_ssize_t c, i
    cdef Py_ssize_t ncomp = acc.shape[0], n = acc.shape[1]
    cdef double *a
    cdef const double *l
    cdef const double *r
    cdef double e, wl, wr
    if n == 0:
        return
    with nogil:
        for c in range(ncomp):
            a = <double *> &acc[c, 0]
            l = <const double *> &left[c, 0]
            r = <const double *> &right[c, 0]
            for i in range(n):
                e = decay[i]
                wl = w_left[i]
                wr = w_right[i]
                a[2 * i] = e * a[2 * i] + wl * l[2 * i] + wr * r[2 * i]
                a[2 * i + 1] = e * a[2 * i + 1] + wl * l[2 * i + 1] + wr * r[2 * i + 1]


DEF BLOCK = 256


cdef inline double _term(double s, int ipow, int eighths, double half) noexcept nogil:
    # s^(ipow + eighths/8) when ipow >= 0, else the generic pow
    cdef double t, r
    cdef int k
    if ipow >= 0:
        t = 1.0
        for k in range(ipow):
            t *= s
        if eighths:
            r = sqrt(s)
            if eighths & 4:
                t *= r
            r = sqrt(r)
            if eighths & 2:
                t *= r
            if eighths & 1:
                t *= sqrt(r)
        return t
    return pow(s, half)


def power_sum(const double[:, ::1] values, double q):
    """Sum of |v(x)|^q over grid points.

    Terms are summed plainly within fixed blocks and the block sums are
    combined with Neumaier compensation, so the result is deterministic.
    """
    cdef Py_ssize_t c, i, b, start, stop
    cdef Py_ssize_t ncomp = values.shape[0], n = values.shape[1]
    cdef double s, block, total = 0.0, comp = 0.0, t, half = 0.5 * q
    cdef double buf[BLOCK]
    cdef int ipow = -1, eighths = 0
    cdef double q4 = 4.0 * q
    # q a multiple of 1/4 (so q/2 a multiple of 1/8): products and square roots
    if 0.0 < q <= 16.0 and q4 == <double>(<int>q4):
        ipow = <int>q4 // 8
        eighths = <int>q4 % 8
    with nogil:
        start = 0
        while start < n:
            stop = start + BLOCK if start + BLOCK < n else n
            for i in range(start, stop):
                buf[i - start] = 0.0
            for c in range(ncomp):
                for i in range(start, stop):
                    buf[i - start] += values[c, i] * values[c, i]
            block = 0.0
            if q == 2.0:
                for b in range(stop - start):
                    block += buf[b]
            else:
                for b in range(stop - start):
                    block += _term(buf[b], ipow, eighths, half)
            t = total + block
            if fabs(total) >= fabs(block):
                comp += (total - t) + block
            else:
                comp += (block - t) + total
            total = t
            start = stop
    return total + comp


def max_magnitude(const double[:, ::1] values):
    cdef Py_ssize_t c, i
    cdef Py_ssize_t ncomp = values.shape[0], n = values.shape[1]
    cdef double s, best = 0.0
    with nogil:
        for i in range(n):
            s = 0.0
            for c in range(ncomp):
                s += values[c, i] * values[c, i]
            if s > best:
                best = s
    return sqrt(best)
