"""Initial-data library: mean-free, divergence-free velocity fields."""

from __future__ import annotations

import math

import numpy as np
import scipy.fft as sfft

from .spectral import SpectralVectorField
from .stokes import leray_project

CHOICES = ("taylor_green", "random_divfree", "singular_ld", "from_file")


def _finish(domain, coeffs):
    coeffs = np.array(coeffs, dtype=complex)
    coeffs[(slice(None),) + (0,) * domain.d] = 0.0
    coeffs[:, domain.nyquist_mask] = 0.0
    return leray_project(SpectralVectorField(domain, coeffs))


def taylor_green(domain, amplitude=1.0):
    """Taylor-Green cell on the box's fundamental wavenumber.

    d = 2: ``(sin x1 cos x2, -cos x1 sin x2)``; d = 3 adds a ``cos x3``
    factor to the first two components and a zero third component.
    """
    x = [2 * math.pi / domain.box_length * c for c in domain.coordinates()]
    if domain.d == 2:
        u = [np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])]
    else:
        z = np.cos(x[2])
        u = [np.sin(x[0]) * np.cos(x[1]) * z, -np.cos(x[0]) * np.sin(x[1]) * z, 0 * z]
    vals = amplitude * np.stack(u)
    return _finish(domain, sfft.rfftn(vals, axes=domain.axes, norm="forward"))


def random_divfree(domain, amplitude, spectral_decay=2.0, seed=0, cutoff=None):
    """Random solenoidal field with ``|a_k| ~ (1 + |n|^2)^(-spectral_decay/2)``.

    Modes beyond integer wavenumber ``cutoff`` (default: the 2/3 band edge) are
    removed. ``amplitude`` is the root-mean-square speed ``||a||_2 / L^(d/2)``.
    """
    rng = np.random.default_rng(np.uint64(seed))
    noise = rng.standard_normal((domain.d,) + domain.shape)
    c = sfft.rfftn(noise, axes=domain.axes, norm="forward")
    nsq = sum(m.astype(float) ** 2 for m in domain.mode_indices)
    c = c * (1.0 + nsq) ** (-0.5 * spectral_decay)
    if cutoff is None:
        c = c * domain.dealias_mask
    else:
        keep = np.ones(domain.spectral_shape, dtype=bool)
        for m in domain.mode_indices:
            keep &= np.abs(m) <= cutoff
        c = c * keep
    a = _finish(domain, c)
    rms = a.l2() / math.sqrt(domain.volume)
    if amplitude == 0 or rms == 0:
        return SpectralVectorField.zeros(domain)
    return a * (amplitude / rms)


def _smooth_cutoff(rho, inner, outer):
    """C-infinity step: 1 for ``rho <= inner``, 0 for ``rho >= outer``."""
    s = np.clip((rho - inner) / (outer - inner), 0.0, 1.0)

    def bump(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    num = bump(1.0 - s)
    return num / (num + bump(s))


def singular_profile(domain, alpha, mollification_radius, center=None):
    """Scalar ``(rho^2 + r^2)^(-alpha/2)`` times a smooth cutoff, ``rho`` the periodic distance."""
    if center is None:
        center = [domain.box_length / 2] * domain.d
    L = domain.box_length
    rho2 = np.zeros(domain.shape)
    for x, c in zip(domain.coordinates(), center):
        dx = (x - c + L / 2) % L - L / 2
        rho2 += dx**2
    rho = np.sqrt(rho2)
    prof = (rho2 + mollification_radius**2) ** (-0.5 * alpha)
    return prof * _smooth_cutoff(rho, 0.0, 0.5 * L)


def singular_ld(domain, alpha, mollification_radius, center=None, amplitude=1.0):
    """Leray projection of ``amplitude * profile * e_1`` for the mollified ``|x - x0|^(-alpha)``.

    The unmollified profile is in ``L^d`` only for ``alpha < 1``.
    """
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must satisfy 0 <= alpha < 1 to stay in L^d, got {alpha}")
    if not mollification_radius > 0:
        raise ValueError("mollification_radius must be positive")
    prof = amplitude * singular_profile(domain, alpha, mollification_radius, center)
    vals = np.zeros((domain.d,) + domain.shape)
    vals[0] = prof
    c = sfft.rfftn(vals, axes=domain.axes, norm="forward")
    return _finish(domain, c)


def from_file(domain, path):
    """First stored state of a trajectory file."""
    from .trajio import read_trajectory

    header, _times, coeffs = read_trajectory(path)
    if (header.d, header.grid_points) != (domain.d, domain.grid_points) or (
        header.box_length != domain.box_length
    ):
        raise ValueError(f"{path}: file domain {header} does not match {domain}")
    return SpectralVectorField(domain, coeffs[0])


def make_initial_data(choice, domain, **params):
    """Dispatch on ``choice`` (one of :data:`CHOICES`) with keyword parameters."""
    if choice == "taylor_green":
        return taylor_green(domain, **params)
    if choice == "random_divfree":
        return random_divfree(domain, **params)
    if choice == "singular_ld":
        return singular_ld(domain, **params)
    if choice == "from_file":
        return from_file(domain, **params)
    raise ValueError(f"unknown initial data {choice!r}; expected one of {CHOICES}")
