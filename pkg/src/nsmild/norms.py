"""Weighted mixed space-time norms and the diagnostics built on them.

The time integral on a graded grid uses the product midpoint rule: node
``t_i`` owns the dual cell between neighbouring midpoints and the weight
``t^(beta p)`` is integrated exactly over that cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .spectral import bessel_multiplier, multi_indices, physical_lebesgue_norm

SCALING_TOL = 1e-12


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents and orders of ``||.||_(p,q,m,n,delta)``.

    ``delta=None`` means the horizon of whatever trajectory is measured.
    A non-integer ``n`` selects the Sobolev (Bessel multiplier) form.
    """

    p: float
    q: float
    m: int = 0
    n: float = 0
    delta: float | None = None

    def __post_init__(self):
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError(f"m must be a nonnegative integer, got {self.m}")
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @classmethod
    def on_scaling_line(cls, d, q, m=0, n=0, delta=None):
        """Spec with ``p`` solved from ``2/p + d/q = 1``."""
        rest = 1.0 - d / q
        p = math.inf if abs(rest) <= SCALING_TOL else 2.0 / rest
        return cls(p, float(q), m, n, delta)

    @classmethod
    def parse(cls, text):
        """Parse ``"p,q,m,n[,delta]"``; ``inf`` is accepted for p."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) not in (4, 5):
            raise ValueError(f"expected p,q,m,n[,delta], got {text!r}")
        p, q = float(parts[0]), float(parts[1])
        m = int(parts[2])
        n = float(parts[3])
        n = int(n) if n.is_integer() else n
        delta = float(parts[4]) if len(parts) == 5 and parts[4] else None
        return cls(p, q, m, n, delta)

    @property
    def integer_n(self):
        return float(self.n).is_integer()

    def validate(self, d):
        check_scaling_line(d, self.p, self.q)

    def as_dict(self):
        return {"p": self.p, "q": self.q, "m": self.m, "n": self.n, "delta": self.delta}


def check_scaling_line(d, p, q):
    if not d <= q <= d + 2:
        raise ValueError(f"q = {q} outside [d, d+2] for d = {d}")
    if not p >= d + 2:
        raise ValueError(f"p = {p} below d+2 = {d + 2}")
    gap = (0.0 if math.isinf(p) else 2.0 / p) + d / q - 1.0
    if abs(gap) > SCALING_TOL:
        raise ValueError(f"(p, q) = ({p}, {q}) violates 2/p + d/q = 1 by {gap:.3e}")


def time_lp_norm(values, grid, beta, p, delta=None):
    """``|| t^beta g(t) ||_{L^p(0, delta)}`` from nodal values ``g(t_i)``."""
    values = np.asarray(values, dtype=float)
    delta = grid.delta if delta is None else float(delta)
    if delta > grid.delta * (1 + 1e-12):
        raise ValueError(f"delta = {delta} exceeds the trajectory horizon {grid.delta}")
    nodes = grid.nodes
    if math.isinf(p):
        keep = nodes <= delta * (1 + 1e-12)
        if not np.any(keep):
            keep[0] = True
        return float(np.max(nodes[keep] ** beta * values[keep]))
    edges = grid.cell_edges(delta)
    e = beta * p + 1.0
    w = (edges[1:] ** e - edges[:-1] ** e) / e
    return float(np.sum(w * values**p)) ** (1.0 / p)


def cell_weights(grid, beta, p, delta=None):
    edges = grid.cell_edges(delta)
    e = beta * p + 1.0
    return (edges[1:] ** e - edges[:-1] ** e) / e


@lru_cache(maxsize=32)
def _multiplier_stack(dom, order):
    mults = []
    for alpha in multi_indices(dom.d, order):
        m = np.ones(dom.spectral_shape, dtype=complex)
        for k, a in zip(dom.wavenumbers, alpha):
            if a:
                m = m * (1j * k) ** a
        mults.append(m)
    out = np.stack(mults)
    out.flags.writeable = False
    return out


def derivative_stack(state, order):
    """Physical samples of ``D^alpha u`` for every ``|alpha| = order``.

    Shape ``(n_alpha, ncomp, *domain.shape)``.
    """
    dom = state.domain
    c = _multiplier_stack(dom, order)[:, None] * state.coeffs[None]
    return sfft.irfftn(c, s=dom.shape, axes=dom.axes, norm="forward")


def gradient_lq_sum(state, order, q):
    """``sum_{|alpha| = order} ||D^alpha u||_{L^q}``."""
    stack = derivative_stack(state, order)
    return sum(physical_lebesgue_norm(s, state.domain, q) for s in stack)


def gradient_magnitude(state, order):
    """Pointwise ``|grad^order u|`` (Euclidean over multi-indices and components)."""
    stack = derivative_stack(state, order)
    flat = stack.reshape((-1,) + state.domain.shape)
    return np.sqrt(np.einsum("c...,c...->...", flat, flat))


def sobolev_lq(state, s, q):
    dom = state.domain
    c = state.coeffs * bessel_multiplier(dom, s)
    vals = sfft.irfftn(c, s=dom.shape, axes=dom.axes, norm="forward")
    return physical_lebesgue_norm(vals, dom, q)


def _active_nodes(grid, p, delta):
    if math.isinf(p):
        keep = grid.nodes <= delta * (1 + 1e-12)
        if not np.any(keep):
            keep[0] = True
        return keep
    edges = grid.cell_edges(delta)
    return edges[:-1] < delta


def _levels(traj, m, derivatives):
    if derivatives is not None:
        if len(derivatives) < m + 1:
            raise ValueError("not enough precomputed time derivatives")
        return list(derivatives[: m + 1])
    if m == 0:
        return [traj]
    from .mild import time_derivative_levels

    return time_derivative_levels(traj, m)


def weighted_norm_terms(traj, spec, derivatives=None):
    """Every term ``||t^(j + k/2) D_t^j grad^k u||`` of the weighted norm, keyed by ``(j, k)``.

    For non-integer ``n`` the single key ``(j, n)`` holds the Sobolev form
    ``|| t^(j + n/2) ||D_t^j u||_{W^{n,q}} ||``.
    """
    spec.validate(traj.domain.d)
    delta = traj.grid.delta if spec.delta is None else spec.delta
    if delta > traj.grid.delta * (1 + 1e-12):
        raise ValueError(f"delta = {delta} exceeds the trajectory horizon {traj.grid.delta}")
    keep = _active_nodes(traj.grid, spec.p, delta)
    levels = _levels(traj, spec.m, derivatives)
    terms = {}
    orders = range(int(spec.n) + 1) if spec.integer_n else [spec.n]
    for j, level in enumerate(levels):
        for k in orders:
            vals = np.zeros(len(traj))
            for i in np.flatnonzero(keep):
                st = level.state(i)
                if spec.integer_n:
                    vals[i] = gradient_lq_sum(st, k, spec.q)
                else:
                    vals[i] = sobolev_lq(st, k, spec.q)
            terms[j, k] = time_lp_norm(vals, traj.grid, j + k / 2, spec.p, delta)
    return terms


def weighted_mixed_norm(traj, spec, derivatives=None):
    """``||u||_(p,q,m,n,delta)``."""
    terms = weighted_norm_terms(traj, spec, derivatives)
    return float(sum(terms[key] for key in sorted(terms)))


def smoothing_rate_fit(traj, k, q, window=None):
    """Least-squares slope and r^2 of ``log ||grad^k u(t)||_q`` against ``log t``.

    The first two and last two nodes are dropped; ``window=(t_lo, t_hi)``
    narrows the fit further. The fitted span must cover a decade.
    """
    t = traj.times
    idx = np.arange(len(traj))[2:-2]
    if window is not None:
        lo, hi = window
        slack = 1e-9
        idx = idx[(t[idx] >= lo * (1 - slack)) & (t[idx] <= hi * (1 + slack))]
    if idx.size < 3 or t[idx[-1]] < 10.0 * t[idx[0]] * (1 - 1e-9):
        raise ValueError("rate fit needs at least three nodes spanning one decade of t")
    g = np.array([gradient_lq_sum(traj.state(i), k, q) for i in idx])
    if np.any(g <= 0):
        raise ValueError("rate fit needs nonzero norms")
    x = np.log(t[idx])
    y = np.log(g)
    y = y - y[0]
    xc = x - x.mean()
    yc = y - y.mean() if np.any(y) else y
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    resid = yc - slope * xc
    ss_tot = float(np.dot(yc, yc))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.dot(resid, resid)) / ss_tot
    return slope, r2


def interpolation_check(traj, m, n, q, p, delta=None):
    """LHS/RHS of the fractional interpolation inequality in Bessel form.

    ``|| t^(m/2) ||u||_{W^{m,q}} ||_{L^p}`` divided by
    ``|| t^(n/2) ||u||_{W^{n,q}} ||_{L^p}^(m/n) * ||u||_{L^q L^p}^(1 - m/n)``.
    """
    if not 0 < m < n:
        raise ValueError(f"need 0 < m < n, got m={m}, n={n}")
    check_scaling_line(traj.domain.d, p, q)
    delta = traj.grid.delta if delta is None else delta
    keep = _active_nodes(traj.grid, p, delta)
    wm = np.zeros(len(traj))
    wn = np.zeros(len(traj))
    w0 = np.zeros(len(traj))
    for i in np.flatnonzero(keep):
        st = traj.state(i)
        wm[i] = sobolev_lq(st, m, q)
        wn[i] = sobolev_lq(st, n, q)
        w0[i] = sobolev_lq(st, 0, q)
    lhs = time_lp_norm(wm, traj.grid, m / 2, p, delta)
    top = time_lp_norm(wn, traj.grid, n / 2, p, delta)
    base = time_lp_norm(w0, traj.grid, 0.0, p, delta)
    if top == 0 or base == 0:
        raise ValueError("degenerate denominator: trajectory vanishes")
    theta = m / n
    return lhs / (top**theta * base ** (1 - theta))


def product_norm(traj, orders, q, p, delta=None):
    """``|| t^((sum n_j + k - 1)/2) prod_j |grad^(n_j) u| ||_{L^q_x L^p_t}``."""
    orders = [int(o) for o in orders]
    k = len(orders)
    if not 2 <= k <= 3:
        raise ValueError(f"product norms are defined for 2 or 3 factors, got {k}")
    if any(o < 0 for o in orders):
        raise ValueError("derivative orders must be nonnegative")
    check_scaling_line(traj.domain.d, p, q)
    delta = traj.grid.delta if delta is None else delta
    if delta > traj.grid.delta * (1 + 1e-12):
        raise ValueError(f"delta = {delta} exceeds the trajectory horizon {traj.grid.delta}")
    keep = _active_nodes(traj.grid, p, delta)
    vals = np.zeros(len(traj))
    dom = traj.domain
    for i in np.flatnonzero(keep):
        st = traj.state(i)
        prod = np.ones(dom.shape)
        for o in orders:
            prod = prod * gradient_magnitude(st, o)
        vals[i] = physical_lebesgue_norm(prod[None], dom, q)
    beta = (sum(orders) + k - 1) / 2
    return time_lp_norm(vals, traj.grid, beta, p, delta)
