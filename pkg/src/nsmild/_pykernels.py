"""Pure-numpy versions of the compiled inner loops (same signatures)."""

import math

import numpy as np

SERIES_CUTOFF = 1.0
SERIES_TERMS = 20


def _phi12(z):
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = z < SERIES_CUTOFF
    zs = z[small]
    t1 = np.zeros_like(zs)
    t2 = np.zeros_like(zs)
    term = np.ones_like(zs)
    for n in range(SERIES_TERMS):
        t1 += term / math.factorial(n + 1)
        t2 += term / math.factorial(n + 2)
        term = term * -zs
    phi1[small] = t1
    phi2[small] = t2
    zl = z[~small]
    e = -np.expm1(-zl)
    phi1[~small] = e / zl
    phi2[~small] = (zl - e) / (zl * zl)
    return phi1, phi2


def etd_weights(lam, h, decay, w_left, w_right):
    z = np.asarray(lam) * h
    p1, p2 = _phi12(z)
    decay[:] = np.exp(-z)
    w_left[:] = h * (p1 - p2)
    w_right[:] = h * p2


def etd_accumulate(acc, decay, w_left, w_right, left, right):
    acc *= decay
    acc += w_left * left
    acc += w_right * right


def power_sum(values, q):
    if values.shape[0] == 1 and q != 2.0:
        return float(np.sum(np.abs(values[0]) ** q))
    s = np.einsum("ci,ci->i", values, values)
    if q == 2.0:
        return float(s.sum())
    return float(np.sum(s ** (0.5 * q)))


def max_magnitude(values):
    return float(np.sqrt(np.einsum("ci,ci->i", values, values).max()))
