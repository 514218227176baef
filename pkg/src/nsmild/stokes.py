"""Linear Stokes machinery as Fourier multipliers.

Heat semigroup, Leray projector, the Stokes semigroup ``exp(s Lap) P`` and
physical-space slices of its kernel for diagnostics, plus pressure recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .spectral import (
    SpectralVectorField,
    dealiased_product,
    physical_lebesgue_norm,
)

#: minimum of ``s * k_edge^2`` for a kernel slice to count as resolved
RESOLVED_DECAY = 20.0


def heat_semigroup(a, t):
    """``exp(t Lap) a``."""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return a
    return a.with_coeffs(a.coeffs * np.exp(-t * a.domain.ksq))


def _require_vector(f):
    if f.ncomp != f.domain.d:
        raise ValueError(f"expected a {f.domain.d}-component field, got {f.ncomp}")


def project_coeffs(domain, coeffs):
    """Apply ``I - k k^T / |k|^2`` mode by mode; the k = 0 mode is left alone."""
    ks = domain.wavenumbers
    ksq = domain.ksq
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    kdot = sum(k * coeffs[j] for j, k in enumerate(ks))
    out = np.empty_like(coeffs)
    for j, k in enumerate(ks):
        out[j] = coeffs[j] - k * kdot * inv
    return out


def leray_project(f):
    """Divergence-free part of ``f``; the mean is preserved."""
    _require_vector(f)
    return f.with_coeffs(project_coeffs(f.domain, f.coeffs))


def stokes_semigroup(f, s):
    """``exp(s Lap) P f``: convolution with the Oseen kernel at time ``s``."""
    if s < 0:
        raise ValueError(f"Stokes semigroup needs s >= 0, got {s}")
    _require_vector(f)
    c = project_coeffs(f.domain, f.coeffs)
    if s > 0:
        c *= np.exp(-s * f.domain.ksq)
    return f.with_coeffs(c)


@dataclass(frozen=True, eq=False)
class OseenKernelSlice:
    """Physical samples ``values[i, j] = K_ij(y, s)`` on the grid."""

    domain: object
    s: float
    values: np.ndarray

    def radial_profile(self, i, j, axis=0):
        """``(|y|, K_ij)`` along the positive ``axis`` direction, ``0 < |y| < L/2``."""
        n = self.domain.grid_points
        idx = [0] * self.domain.d
        r = np.arange(1, n // 2) * self.domain.box_length / n
        vals = []
        for m in range(1, n // 2):
            idx[axis] = m
            vals.append(self.values[(i, j) + tuple(idx)])
        return r, np.array(vals)


def _kernel_multiplier(domain, s, i, j):
    ks = domain.wavenumbers
    ksq = domain.ksq
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    m = (1.0 if i == j else 0.0) - ks[i] * ks[j] * inv
    m = m * np.ones(domain.spectral_shape)
    m[(0,) * domain.d] = 1.0 if i == j else 0.0
    m = m * np.exp(-s * ksq) / domain.volume
    m[domain.nyquist_mask] = 0.0
    return m


def _check_resolved(domain, s):
    if not s > 0:
        raise ValueError(f"kernel time must be positive, got {s}")
    if s < domain.resolved_decay_time(RESOLVED_DECAY):
        raise ValueError(
            f"s = {s:g} is under-resolved on this grid; need "
            f"s >= {domain.resolved_decay_time(RESOLVED_DECAY):g}"
        )


def oseen_kernel_slice(domain, s):
    """Sample the periodic Oseen kernel at time ``s`` on the grid."""
    _check_resolved(domain, s)
    d = domain.d
    vals = np.empty((d, d) + domain.shape)
    for i in range(d):
        for j in range(i, d):
            m = _kernel_multiplier(domain, s, i, j)
            vals[i, j] = sfft.irfftn(m, s=domain.shape, axes=domain.axes, norm="forward")
            vals[j, i] = vals[i, j]
    return OseenKernelSlice(domain, float(s), vals)


def kernel_gradient_norm(domain, s, q):
    """``sum_j || d_j K(., s) ||_{L^{q'}}`` with ``q' = q/(q-1)`` and pointwise Frobenius length."""
    d = domain.d
    if not d <= q <= d + 2:
        raise ValueError(f"q must lie in [d, d+2] = [{d}, {d + 2}], got {q}")
    _check_resolved(domain, s)
    qdual = q / (q - 1.0)
    mults = {}
    for i in range(d):
        for l in range(i, d):
            mults[i, l] = _kernel_multiplier(domain, s, i, l)
    total = 0.0
    for j, kj in enumerate(domain.wavenumbers):
        comps = []
        for i in range(d):
            for l in range(d):
                m = mults[min(i, l), max(i, l)]
                comps.append(
                    sfft.irfftn(1j * kj * m, s=domain.shape, axes=domain.axes, norm="forward")
                )
        total += physical_lebesgue_norm(np.stack(comps), domain, qdual)
    return total


def pressure_from_velocity(u, div_tol=1e-8):
    """Pressure ``p = (-Lap)^{-1} d_i d_j (u_i u_j)`` with zero mean."""
    _require_vector(u)
    ratio = u.divergence_ratio()
    if ratio > div_tol:
        raise ValueError(f"velocity is not divergence-free (ratio {ratio:.3e})")
    dom = u.domain
    ks = dom.wavenumbers
    ksq = dom.ksq
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    acc = np.zeros(dom.spectral_shape, dtype=complex)
    for i in range(dom.d):
        ui = u.component(i)
        prod = dealiased_product(ui, u).coeffs
        for j in range(dom.d):
            acc += ks[i] * ks[j] * prod[j]
    return SpectralVectorField(dom, (-acc * inv)[None])


def projector_operator_ratio(f, s, q):
    """``||exp(s Lap) P f||_q / ||f||_q``: proxy for the uniform operator bound."""
    from .spectral import lebesgue_norm

    den = lebesgue_norm(f, q)
    if den == 0:
        raise ValueError("zero field has no operator ratio")
    return lebesgue_norm(stokes_semigroup(f, s), q) / den


def gaussian_lq_norm(d, t, q, mass=1.0):
    """Closed-form ``L^q`` norm of ``mass * (4 pi t)^{-d/2} exp(-|x|^2/4t)`` on R^d."""
    if math.isinf(q):
        return mass * (4 * math.pi * t) ** (-d / 2)
    return mass * (4 * math.pi * t) ** (-(d / 2) * (1 - 1 / q)) * q ** (-d / (2 * q))
