"""Mild-solution construction: heat trajectory, Duhamel bilinear form, Picard map.

The integral equation is written ``u = U + B(u, u)`` with

    B(u, v)(t) = -int_0^t exp((t - s) Lap) P d_j (u_j v)(s) ds,

so the sign of the quadratic term lives inside ``B``. The time integral is
done mode by mode against the piecewise-linear interpolant of the forcing,
which integrates the exponential exactly (first-order exponential integrator
weights). The first cell ``(0, t_1]`` uses a forcing value at ``t = 0``
extrapolated from the first two nodes, so nothing is evaluated at ``t = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .norms import MixedNormSpec, weighted_mixed_norm
from .spectral import Domain, SpectralVectorField, flux_divergence
from .stokes import project_coeffs
from .trajectory import TimeGrid, Trajectory

log = logging.getLogger(__name__)

DIVERGENCE_TOL = 1e-10
MAX_TIME_DERIVATIVE = 3


class ContractionError(RuntimeError):
    """The Picard map failed to contract: ``delta`` is too large for the data."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BlowupError(ContractionError):
    """Norm growth beyond the configured threshold."""


class ResolutionError(ValueError):
    """Too much energy in unresolved modes for the requested operation."""


@dataclass(frozen=True)
class SolverConfig:
    d: int = 2
    box_length: float = 2 * math.pi
    grid_points: int = 64
    delta: float = 1.0
    nodes: int = 32
    grading: float = 2.0
    picard_max_iterations: int = 20
    contraction_tolerance: float = 1e-10
    blowup_threshold: float = 1e3
    control: MixedNormSpec | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.nodes < 2:
            raise ValueError("need at least two time nodes")
        if self.picard_max_iterations < 1:
            raise ValueError("picard_max_iterations must be >= 1")
        if not (self.contraction_tolerance > 0 and self.blowup_threshold > 0):
            raise ValueError("tolerances must be positive")
        self.domain  # validates d, box, grid
        self.control_spec.validate(self.d)

    @property
    def domain(self):
        return Domain(self.d, float(self.box_length), int(self.grid_points))

    @property
    def time_grid(self):
        return TimeGrid.graded(self.delta, self.nodes, self.grading)

    @property
    def control_spec(self):
        if self.control is not None:
            return self.control
        return MixedNormSpec(self.d + 2, self.d + 2, 0, 1)


@dataclass
class PicardReport:
    """Per-iteration record of the Picard sweep.

    ``ratios[0]`` compares the first correction with ``||U||`` (the step from
    the zero field to ``U``); later entries are successive correction ratios.
    """

    initial_norm: float = 0.0
    norms: list = field(default_factory=list)
    corrections: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    residual: float | None = None
    converged: bool = False
    status: str = "running"
    message: str = ""

    @property
    def iterations(self):
        return len(self.corrections)

    def as_dict(self):
        return {
            "initial_norm": self.initial_norm,
            "norms": list(self.norms),
            "corrections": list(self.corrections),
            "ratios": list(self.ratios),
            "residual": self.residual,
            "converged": self.converged,
            "status": self.status,
            "message": self.message,
            "iterations": self.iterations,
        }


def _check_velocity(a, what="initial data"):
    if a.ncomp != a.domain.d:
        raise ValueError(f"{what} must have {a.domain.d} components")
    if not a.is_mean_free():
        raise ValueError(f"{what} must be mean-free")
    ratio = a.divergence_ratio()
    if ratio > DIVERGENCE_TOL:
        raise ValueError(f"{what} is not divergence-free (ratio {ratio:.3e})")


def heat_trajectory(a, grid):
    """``U(t_i) = exp(t_i Lap) a`` at every node."""
    _check_velocity(a)
    decay = np.exp(-grid.nodes[:, None] * a.domain.ksq.ravel()[None])
    c = a.coeffs.reshape(a.ncomp, -1)[None] * decay[:, None]
    return Trajectory(a.domain, grid, c.reshape((len(grid),) + a.coeffs.shape))


def forcing_coeffs(u, v):
    """``-P d_j (u_j v)`` for two states, dealiased."""
    flux = flux_divergence(u, v)
    return -project_coeffs(u.domain, flux.coeffs)


def _cell_weights(lam, h):
    decay = np.empty_like(lam)
    wl = np.empty_like(lam)
    wr = np.empty_like(lam)
    kernels.etd_weights(lam, float(h), decay, wl, wr)
    return decay, wl, wr


def duhamel_integral(domain, grid, forcing):
    """``int_0^{t_i} exp((t_i - s) Lap) F(s) ds`` from nodal values of ``F``.

    ``forcing`` has shape ``(len(grid), ncomp, *spectral_shape)``.
    """
    nodes = grid.nodes
    count = len(grid)
    ncomp = forcing.shape[1]
    lam = np.ascontiguousarray(domain.ksq.ravel())
    flat = forcing.reshape(count, ncomp, -1)
    if count >= 2:
        slope = (flat[1] - flat[0]) / (nodes[1] - nodes[0])
        left = np.ascontiguousarray(flat[0] - slope * nodes[0])
    else:
        left = np.ascontiguousarray(flat[0])
    acc = np.zeros((ncomp, lam.size), dtype=complex)
    out = np.empty_like(flat)
    h_prev = None
    for i, h in enumerate(grid.steps()):
        if h_prev is None or abs(h - h_prev) > 1e-13 * h:
            decay, wl, wr = _cell_weights(lam, h)
            h_prev = h
        right = np.ascontiguousarray(flat[i])
        kernels.etd_accumulate(acc, decay, wl, wr, left, right)
        out[i] = acc
        left = right
    return out.reshape(forcing.shape)


def duhamel_bilinear(u, v):
    """``B(u, v)`` at every node of the shared time grid."""
    u._check(v)
    forcing = np.empty_like(v.coeffs)
    same = u is v
    for i in range(len(u)):
        ui = u.state(i)
        vi = ui if same else v.state(i)
        forcing[i] = forcing_coeffs(ui, vi)
    return Trajectory(u.domain, u.grid, duhamel_integral(u.domain, u.grid, forcing))


def picard_iterate(v, U):
    """``T(v) = U + B(v, v)``."""
    U._check(v)
    return U + duhamel_bilinear(v, v)


def solve_mild(a, config):
    """Fixed point of ``T`` by successive substitution starting from ``U``.

    Returns ``(trajectory, report)``. Raises :class:`ContractionError` when
    the correction ratios exceed one three times in a row, and
    :class:`BlowupError` when the control norm passes ``blowup_threshold``
    times ``||U||``; both carry the partial report.
    """
    if a.domain != config.domain:
        raise ValueError("initial data and solver config disagree on the domain")
    grid = config.time_grid
    U = heat_trajectory(a, grid)
    spec = config.control_spec

    def control(tr):
        return weighted_mixed_norm(tr, spec)

    report = PicardReport(initial_norm=control(U))
    prev = report.initial_norm
    v = U
    bad = 0
    for it in range(config.picard_max_iterations):
        v_new = picard_iterate(v, U)
        vn = control(v_new)
        corr = control(v_new - v)
        ratio = corr / prev if prev > 0 else 0.0
        report.norms.append(vn)
        report.corrections.append(corr)
        report.ratios.append(ratio)
        log.debug("picard %d: norm %.6e correction %.3e ratio %.3e", it, vn, corr, ratio)
        if not math.isfinite(vn) or vn > config.blowup_threshold * report.initial_norm:
            report.status = "blowup"
            report.message = f"control norm {vn:.3e} exceeded threshold at iteration {it + 1}"
            raise BlowupError(report.message, report)
        bad = bad + 1 if ratio > 1 else 0
        if bad >= 3:
            report.status = "no_contraction"
            report.message = (
                f"correction ratio above 1 for 3 consecutive iterations "
                f"(last {ratio:.3f}); delta too large for the data"
            )
            raise ContractionError(report.message, report)
        v = v_new
        if corr <= config.contraction_tolerance * vn:
            report.converged = True
            break
        prev = corr
    vn = control(v)
    report.residual = 0.0 if vn == 0 else control(picard_iterate(v, U) - v) / vn
    if report.converged:
        report.status = "converged"
    else:
        report.status = "max_iterations"
        report.message = "iteration cap reached before the correction tolerance"
    return v, report


def time_march(
    a,
    t_final,
    steps,
    record_every=1,
    blowup_threshold=1e3,
    corrector_tol=1e-13,
    max_corrector=10,
):
    """Step the Duhamel formula over uniform cells of length ``t_final/steps``.

    Each step solves ``u+ = E u + w_l F(u) + w_r F(u+)`` by fixed-point
    iteration, the same per-cell quadrature that :func:`duhamel_bilinear`
    uses. States are recorded every ``record_every`` steps.
    """
    _check_velocity(a)
    if not t_final > 0 or steps < 1:
        raise ValueError("need t_final > 0 and at least one step")
    if steps % record_every:
        raise ValueError("steps must be a multiple of record_every")
    dom = a.domain
    h = t_final / steps
    lam = np.ascontiguousarray(dom.ksq.ravel())
    decay, wl, wr = _cell_weights(lam, h)
    shape = a.coeffs.shape
    ncomp = a.ncomp

    def forcing(c):
        st = SpectralVectorField(dom, c.reshape(shape))
        return np.ascontiguousarray(forcing_coeffs(st, st).reshape(ncomp, -1))

    def l2(c):
        return SpectralVectorField(dom, c.reshape(shape)).l2()

    u = np.array(a.coeffs.reshape(ncomp, -1))
    f_u = forcing(u)
    scale0 = l2(u)
    saved = []
    for n in range(1, steps + 1):
        guess = u.copy()
        kernels.etd_accumulate(guess, decay, wl, wr, f_u, f_u)
        for _ in range(max_corrector):
            new = u.copy()
            kernels.etd_accumulate(new, decay, wl, wr, f_u, forcing(guess))
            change = l2(new - guess)
            guess = new
            if change <= corrector_tol * max(l2(new), 1e-300):
                break
        u = guess
        norm = l2(u)
        if not math.isfinite(norm) or norm > blowup_threshold * max(scale0, 1e-300):
            raise BlowupError(f"time_march: L2 norm {norm:.3e} exceeded threshold at step {n}")
        f_u = forcing(u)
        if n % record_every == 0:
            saved.append(u.reshape(shape).copy())
    count = steps // record_every
    grid = TimeGrid(h * record_every * np.arange(1, count + 1), 1.0)
    return Trajectory(dom, grid, np.stack(saved))


def _tail_fraction(coeffs, domain):
    w = domain.mode_multiplicity
    e = w * np.sum(coeffs.real**2 + coeffs.imag**2, axis=0)
    total = e.sum()
    if total == 0:
        return 0.0
    return float(e[~domain.dealias_mask].sum() / total)


def time_derivative_levels(traj, m, tail_tol=1e-3):
    """``[D_t^0 u, ..., D_t^m u]`` from the equation ``u_t = Lap u - P d_i(u_i u)``.

    Each level uses the Leibniz rule on the divergence-form nonlinearity:
    ``D^m u = Lap D^(m-1) u - P sum_j C(m-1, j) d_i((D^j u)_i D^(m-1-j) u)``.
    """
    if m < 0 or int(m) != m:
        raise ValueError(f"time-derivative order must be a nonnegative integer, got {m}")
    if m > MAX_TIME_DERIVATIVE:
        raise ResolutionError(f"time derivatives above order {MAX_TIME_DERIVATIVE} are not resolved")
    dom = traj.domain
    out = [np.empty_like(traj.coeffs) for _ in range(m)]
    for i in range(len(traj)):
        levels = [traj.state(i)]
        for mm in range(1, m + 1):
            c = -dom.ksq * levels[mm - 1].coeffs
            flux = np.zeros_like(c)
            for j in range(mm):
                flux += math.comb(mm - 1, j) * flux_divergence(
                    levels[j], levels[mm - 1 - j]
                ).coeffs
            c = c - project_coeffs(dom, flux)
            levels.append(SpectralVectorField(dom, c))
            out[mm - 1][i] = c
    result = [traj] + [traj.with_coeffs(c) for c in out]
    if m:
        worst = max(_tail_fraction(result[-1].coeffs[i], dom) for i in range(len(traj)))
        if worst > tail_tol:
            raise ResolutionError(
                f"D_t^{m} u has {worst:.2e} of its energy outside the dealiased band"
            )
    return result


def time_derivative(traj, m, tail_tol=1e-3):
    """``D_t^m u`` at every node."""
    return time_derivative_levels(traj, m, tail_tol)[-1]
