"""Periodic-box fields stored as Fourier coefficients.

Coefficients are amplitudes: ``f(x) = sum_k c_k exp(i k.x)``. Storage uses
the real-to-complex half spectrum along the last axis, so conjugate symmetry
of the full spectrum holds by construction. Nyquist modes are kept at zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from . import kernels


@dataclass(frozen=True)
class Domain:
    """Torus ``[0, box_length)^d`` sampled with ``grid_points`` per axis."""

    d: int
    box_length: float = 2 * math.pi
    grid_points: int = 64

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        n = self.grid_points
        if n < 8 or n % 2:
            raise ValueError(f"grid_points must be even and >= 8, got {n}")

    @property
    def shape(self):
        return (self.grid_points,) * self.d

    @property
    def spectral_shape(self):
        n = self.grid_points
        return (n,) * (self.d - 1) + (n // 2 + 1,)

    @property
    def axes(self):
        return tuple(range(-self.d, 0))

    @property
    def cell_volume(self):
        return (self.box_length / self.grid_points) ** self.d

    @property
    def volume(self):
        return self.box_length**self.d

    @cached_property
    def mode_indices(self):
        """Integer wavenumber index per axis, broadcastable to ``spectral_shape``."""
        n = self.grid_points
        out = []
        for j in range(self.d):
            if j == self.d - 1:
                idx = np.arange(n // 2 + 1)
            else:
                idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
            shape = [1] * self.d
            shape[j] = idx.size
            out.append(idx.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        scale = 2 * math.pi / self.box_length
        return tuple(scale * m for m in self.mode_indices)

    @cached_property
    def ksq(self):
        return sum(k**2 for k in self.wavenumbers) * np.ones(self.spectral_shape)

    @cached_property
    def nyquist_mask(self):
        half = self.grid_points // 2
        mask = np.zeros(self.spectral_shape, dtype=bool)
        for m in self.mode_indices:
            mask = mask | (np.abs(m) == half)
        return mask

    @cached_property
    def dealias_mask(self):
        return dealias_mask(self)

    @cached_property
    def mode_multiplicity(self):
        """Weight of each stored mode in full-spectrum sums (conjugate pairs)."""
        last = self.mode_indices[-1]
        w = np.where((last == 0) | (last == self.grid_points // 2), 1.0, 2.0)
        return w * np.ones(self.spectral_shape)

    def coordinates(self):
        x = np.arange(self.grid_points) * (self.box_length / self.grid_points)
        return np.meshgrid(*([x] * self.d), indexing="ij")

    def resolved_decay_time(self, decay=20.0):
        """Smallest t with exp(-t k^2) <= exp(-decay) at the band edge."""
        kedge = (self.grid_points // 2 - 1) * 2 * math.pi / self.box_length
        return decay / kedge**2


def dealias_mask(domain):
    """2/3-rule mask: keep modes with every ``|n_j| < N/3``."""
    keep = np.ones(domain.spectral_shape, dtype=bool)
    for m in domain.mode_indices:
        keep = keep & (3 * np.abs(m) < domain.grid_points)
    return keep


class SpectralVectorField:
    """Immutable field with ``ncomp`` components (1 for scalars, ``d`` for vectors)."""

    __slots__ = ("domain", "coeffs")

    def __init__(self, domain, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape[1:] != domain.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape[1:]} does not match domain "
                f"{domain.spectral_shape}"
            )
        coeffs = np.ascontiguousarray(coeffs)
        coeffs.flags.writeable = False
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralVectorField is immutable")

    @classmethod
    def from_physical(cls, domain, values):
        """Build from grid samples of shape ``(ncomp, *domain.shape)`` or ``domain.shape``."""
        values = np.asarray(values, dtype=float)
        if values.shape == domain.shape:
            values = values[None]
        c = sfft.rfftn(values, axes=domain.axes, norm="forward")
        c[:, domain.nyquist_mask] = 0.0
        return cls(domain, c)

    @classmethod
    def zeros(cls, domain, ncomp=None):
        ncomp = domain.d if ncomp is None else ncomp
        return cls(domain, np.zeros((ncomp,) + domain.spectral_shape, complex))

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    def physical(self):
        return sfft.irfftn(
            self.coeffs, s=self.domain.shape, axes=self.domain.axes, norm="forward"
        )

    def component(self, i):
        return SpectralVectorField(self.domain, self.coeffs[i : i + 1])

    def with_coeffs(self, coeffs):
        return SpectralVectorField(self.domain, coeffs)

    def _check(self, other):
        if not isinstance(other, SpectralVectorField):
            return NotImplemented
        if other.domain != self.domain:
            raise ValueError("fields live on different domains")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def l2(self):
        """Spectral (Plancherel) L^2 norm over the box."""
        w = self.domain.mode_multiplicity
        s = np.sum(w * (self.coeffs.real**2 + self.coeffs.imag**2))
        return math.sqrt(s * self.domain.volume)

    def mean_mode(self):
        return self.coeffs[(slice(None),) + (0,) * self.domain.d]

    def is_mean_free(self, rtol=1e-12):
        scale = max(np.abs(self.coeffs).max(), 1e-300)
        return bool(np.all(np.abs(self.mean_mode()) <= rtol * scale))

    def divergence(self):
        if self.ncomp != self.domain.d:
            raise ValueError("divergence needs a d-component field")
        c = sum(1j * k * self.coeffs[j] for j, k in enumerate(self.domain.wavenumbers))
        return SpectralVectorField(self.domain, c[None])

    def divergence_ratio(self):
        """``||div f||_2 / ||grad f||_2``: dimensionless, 0 for constant fields."""
        grad = self.coeffs * np.sqrt(self.domain.ksq)
        g = SpectralVectorField(self.domain, grad).l2()
        return 0.0 if g == 0.0 else self.divergence().l2() / g

    def __repr__(self):
        return f"SpectralVectorField(ncomp={self.ncomp}, domain={self.domain})"


def _as_scalar(f):
    if f.ncomp != 1:
        raise ValueError("expected a scalar (one-component) field")
    return f


def multi_indices(d, order):
    """All multi-indices of ``d`` nonnegative entries summing to ``order``."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), order):
        alpha = [0] * d
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return sorted(set(out), reverse=True)


def derivative_multiplier(domain, alpha):
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != domain.d:
        raise ValueError(f"multi-index {alpha} has wrong length for d={domain.d}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index entries must be nonnegative, got {alpha}")
    if 3 * sum(alpha) > domain.grid_points:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds grid_points/3")
    m = np.ones(domain.spectral_shape, dtype=complex)
    for k, a in zip(domain.wavenumbers, alpha):
        if a:
            m = m * (1j * k) ** a
    return m


def derivative(f, alpha):
    """Apply ``D^alpha`` to every component of ``f``."""
    if not any(alpha):
        derivative_multiplier(f.domain, alpha)  # validation only
        return f
    return f.with_coeffs(f.coeffs * derivative_multiplier(f.domain, alpha))


def dealiased_product(f, g):
    """Pointwise product ``f * g`` of a scalar and a field under the 2/3 rule."""
    if f.domain != g.domain:
        raise ValueError("fields live on different domains")
    _as_scalar(f)
    dom = f.domain
    mask = dom.dealias_mask
    fp = sfft.irfftn(f.coeffs * mask, s=dom.shape, axes=dom.axes, norm="forward")
    gp = sfft.irfftn(g.coeffs * mask, s=dom.shape, axes=dom.axes, norm="forward")
    c = sfft.rfftn(fp * gp, axes=dom.axes, norm="forward")
    c *= mask
    return SpectralVectorField(dom, c)


def flux_divergence(u, v):
    """``sum_j d_j (u_j v)`` with dealiased products, batched over transforms.

    Equal to ``sum_j derivative(dealiased_product(u_j, v), e_j)``.
    """
    if u.domain != v.domain:
        raise ValueError("fields live on different domains")
    dom = u.domain
    mask = dom.dealias_mask
    up = sfft.irfftn(u.coeffs * mask, s=dom.shape, axes=dom.axes, norm="forward")
    vp = up if v is u else sfft.irfftn(
        v.coeffs * mask, s=dom.shape, axes=dom.axes, norm="forward"
    )
    out = np.zeros(v.coeffs.shape, dtype=complex)
    for j, k in enumerate(dom.wavenumbers):
        prod = sfft.rfftn(up[j][None] * vp, axes=dom.axes, norm="forward")
        out += (1j * k) * prod
    out *= mask
    return SpectralVectorField(dom, out)


def convective_term(u, v):
    """``sum_j u_j d_j v`` with dealiased products.

    For divergence-free ``u`` this equals :func:`flux_divergence` exactly
    in exact arithmetic; any gap is aliasing or roundoff.
    """
    if u.domain != v.domain:
        raise ValueError("fields live on different domains")
    dom = u.domain
    out = np.zeros(v.coeffs.shape, dtype=complex)
    for j, k in enumerate(dom.wavenumbers):
        dv = v.with_coeffs(v.coeffs * (1j * k))
        out += dealiased_product(u.component(j), dv).coeffs
    return SpectralVectorField(dom, out)


def lebesgue_norm(f, q):
    """L^q norm of ``|f(x)|`` over the box (rectangle rule); ``q = inf`` is the grid max."""
    if isinstance(f, SpectralVectorField):
        values = f.physical()
        dom = f.domain
    else:
        raise TypeError("lebesgue_norm expects a SpectralVectorField")
    return physical_lebesgue_norm(values, dom, q)


def physical_lebesgue_norm(values, domain, q):
    """Same as :func:`lebesgue_norm` for samples of shape ``(ncomp, *domain.shape)``."""
    q = float(q)
    if not q >= 1.0:
        raise ValueError(f"exponent q must be >= 1, got {q}")
    flat = np.ascontiguousarray(values, dtype=float).reshape(values.shape[0], -1)
    if math.isinf(q):
        return kernels.max_magnitude(flat)
    total = kernels.power_sum(flat, q) * domain.cell_volume
    return total ** (1.0 / q)


def bessel_multiplier(domain, s):
    if s < 0:
        raise ValueError(f"Sobolev order must be nonnegative, got {s}")
    return (1.0 + domain.ksq) ** (0.5 * s)


def sobolev_norm(f, s, q):
    """``W^{s,q}`` norm via the Bessel multiplier ``(1 + |k|^2)^{s/2}``."""
    if s == 0:
        return lebesgue_norm(f, q)
    return lebesgue_norm(f.with_coeffs(f.coeffs * bessel_multiplier(f.domain, s)), q)
