"""Acceptance suite: every criterion as a measured value against a target.

Each check builds its own domains and data, so monkeypatched building blocks
(for mutation testing) take effect. Failures are verdicts, not exceptions.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import mild, norms, spectral, stokes
from .data import random_divfree, singular_ld, taylor_green
from .spectral import Domain, SpectralVectorField
from .trajectory import TimeGrid, Trajectory

LEVELS = ("quick", "full")


@dataclass
class CriterionResult:
    key: str
    name: str
    measured: float
    target: str
    tolerance: float
    passed: bool
    seconds: float = 0.0
    budget: float = math.inf
    detail: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"

    def line(self):
        return (
            f"[{self.verdict}] {self.key} {self.name}: measured={self.measured:.6g} "
            f"target {self.target} (tol {self.tolerance:g}) "
            f"[{self.seconds:.1f}s / {self.budget:g}s]"
        )

    def as_dict(self):
        out = asdict(self)
        out["verdict"] = self.verdict
        return out


@dataclass
class AcceptanceSummary:
    level: str
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def lines(self):
        out = [r.line() for r in self.results]
        n = sum(r.passed for r in self.results)
        out.append(f"{n}/{len(self.results)} criteria passed (level {self.level})")
        return out

    def as_dict(self):
        return {
            "level": self.level,
            "passed": self.passed,
            "results": [r.as_dict() for r in self.results],
        }


def _random_vector_field(domain, rng, decay=1.0):
    """Generic (not solenoidal) mean-free vector field."""
    x = rng.standard_normal((domain.d,) + domain.shape)
    f = SpectralVectorField.from_physical(domain, x)
    c = f.coeffs * (1.0 + domain.ksq) ** (-0.5 * decay)
    c[(slice(None),) + (0,) * domain.d] = 0.0
    return f.with_coeffs(c)


def _relative(a, b):
    den = b.l2()
    return (a - b).l2() / den if den else (a - b).l2()


# -- individual criteria -------------------------------------------------


def taylor_green_exactness(level):
    cfg = mild.SolverConfig(d=2, grid_points=64, delta=1.0, nodes=32, grading=2.0)
    dom = cfg.domain
    a = taylor_green(dom)
    u, report = mild.solve_mild(a, cfg)
    errs = [
        _relative(u.state(i), a * math.exp(-2.0 * t)) for i, t in enumerate(u.times)
    ]
    worst = max(errs)
    return worst, worst <= 1e-6 and report.converged, {
        "iterations": report.iterations,
        "status": report.status,
    }


def projector_suite(level):
    rng = np.random.default_rng(20240611)
    worst = {"idempotence": 0.0, "divergence": 0.0, "commutation": 0.0}
    for d, n in ((2, 32), (3, 16)):
        dom = Domain(d, 2 * math.pi, n)
        alpha = (1, 2) if d == 2 else (1, 0, 2)
        for _ in range(20):
            f = _random_vector_field(dom, rng)
            pf = stokes.leray_project(f)
            worst["idempotence"] = max(
                worst["idempotence"], _relative(stokes.leray_project(pf), pf)
            )
            worst["divergence"] = max(worst["divergence"], pf.divergence_ratio())
            lhs = spectral.derivative(pf, alpha)
            rhs = stokes.leray_project(spectral.derivative(f, alpha))
            worst["commutation"] = max(worst["commutation"], _relative(lhs, rhs))
    measured = max(worst.values())
    return measured, measured <= 1e-12, worst


KERNEL_CASES = ((3, 3, 96), (3, 5, 96), (2, 2, 256), (2, 4, 256))


def kernel_norm_scaling(level):
    detail = {}
    worst = 0.0
    for d, q, n in KERNEL_CASES:
        dom = Domain(d, 2 * math.pi, n)
        s0 = dom.resolved_decay_time(stokes.RESOLVED_DECAY)
        s = s0 * np.logspace(0.0, 1.0, 5)
        vals = [stokes.kernel_gradient_norm(dom, si, q) for si in s]
        slope = float(np.polyfit(np.log(s), np.log(vals), 1)[0])
        target = -(q + d) / (2 * q)
        rel = abs(slope / target - 1)
        detail[f"d={d},q={q}"] = {"slope": slope, "target": target, "rel": rel}
        worst = max(worst, rel)
    return worst, worst <= 0.02, detail


def kernel_far_field(level):
    detail = {}
    worst = 0.0
    for d, n in ((2, 256), (3, 64)):
        dom = Domain(d, 2 * math.pi, n)
        s = dom.resolved_decay_time(stokes.RESOLVED_DECAY)
        kslice = stokes.oseen_kernel_slice(dom, s)
        for i, j in ((0, 0), (1, 1)):
            r, k = kslice.radial_profile(i, j, axis=0)
            win = (r >= 5 * math.sqrt(s)) & (r <= 0.4 * dom.box_length)
            g = r[win] ** d * np.abs(k[win]) * s ** (d / 2)
            band = float(g.max() / g.min()) if g.min() > 0 else math.inf
            detail[f"d={d},K{i + 1}{j + 1}"] = {"band": band, "points": int(win.sum())}
            worst = max(worst, band)
    return worst, worst <= 3.0, detail


def point_mass_trajectory(domain, nodes):
    """Heat flow of the grid-resolved point mass (all coefficients ``1/L^d``)."""
    c0 = np.full((1,) + domain.spectral_shape, 1.0 / domain.volume, dtype=complex)
    c0[:, domain.nyquist_mask] = 0.0
    decay = np.exp(-np.multiply.outer(nodes, domain.ksq))
    return Trajectory(domain, TimeGrid(nodes), decay[:, None] * c0[None])


def heat_smoothing_rates(level):
    detail = {}
    worst = 0.0
    for d, n in ((2, 256), (3, 64)):
        dom = Domain(d, 2 * math.pi, n)
        lo = 1.5 * dom.resolved_decay_time(stokes.RESOLVED_DECAY)
        hi = 10 * lo
        nodes = lo * 10.0 ** (0.1 * np.arange(-2, 13))
        tr = point_mass_trajectory(dom, nodes)
        for q in (d, d + 2):
            for k in (0, 1, 2):
                slope, r2 = norms.smoothing_rate_fit(tr, k, q, (lo, hi))
                target = -k / 2 - (d / 2) * (1 - 1 / q)
                rel = abs(slope / target - 1)
                detail[f"d={d},q={q},n={k}"] = {"slope": slope, "target": target, "r2": r2}
                worst = max(worst, rel)
    return worst, worst <= 0.02, detail


CONTRACTION = {"d": 3, "grid_points": 12, "delta": 0.05, "nodes": 16, "grading": 2.0}


def contraction_behaviour(level):
    seeds = range(3) if level == "quick" else range(10)
    cfg = mild.SolverConfig(**CONTRACTION)
    detail = {}
    ok = True
    worst_ratio = 0.0
    for seed in seeds:
        a = random_divfree(cfg.domain, 0.2, 2.0, seed=seed)
        _, rep = mild.solve_mild(a, cfg)
        _, half = mild.solve_mild(a * 0.5, cfg)
        succ = np.array(rep.ratios[1:])
        monotone = succ.size >= 4 and bool(np.all(np.diff(succ) < 0))
        halving = half.ratios[0] / rep.ratios[0]
        below_one = max(rep.ratios) < 1
        fine = (
            below_one
            and monotone
            and halving <= 0.5 * (1 + 1e-9)
            and rep.converged
            and rep.iterations <= 8
        )
        ok &= fine
        worst_ratio = max(worst_ratio, max(rep.ratios))
        detail[f"seed={seed}"] = {
            "ratios": list(rep.ratios),
            "iterations": rep.iterations,
            "monotone_successive": monotone,
            "halving_factor": halving,
        }
    return worst_ratio, ok, detail


def singular_refinement(level):
    base_nodes = 8 if level == "quick" else 16
    terms = []
    for scale in (1, 2):
        cfg = mild.SolverConfig(
            d=3,
            grid_points=32 * scale,
            delta=0.1,
            nodes=base_nodes * scale,
            grading=2.0,
        )
        a = singular_ld(cfg.domain, 0.9, 0.75, amplitude=0.5)
        u, rep = mild.solve_mild(a, cfg)
        if not rep.converged:
            return math.inf, False, {"status": rep.status}
        terms.append(norms.weighted_norm_terms(u, norms.MixedNormSpec(5, 5, 1, 2)))
    changes = {f"{k}": abs(terms[1][k] / terms[0][k] - 1) for k in terms[0]}
    total = [sum(t.values()) for t in terms]
    changes["total"] = abs(total[1] / total[0] - 1)
    worst = max(changes.values())
    finite = all(math.isfinite(v) for t in terms for v in t.values())
    return worst, finite and worst <= 0.05, {"changes": changes, "norms": total}


def time_derivative_recursion(level):
    dom = Domain(2, 2 * math.pi, 32)
    a = random_divfree(dom, 0.5, 2.0, seed=3)
    horizon = 0.4
    hs, errs = [], []
    for steps in (8, 16, 32, 64, 128):
        tr = mild.time_march(a, horizon, steps)
        h = horizon / steps
        i = steps // 2 - 1
        fd = tr.state(0).with_coeffs((tr.coeffs[i + 1] - tr.coeffs[i - 1]) / (2 * h))
        exact = mild.time_derivative(tr, 1).state(i)
        hs.append(h)
        errs.append(_relative(fd, exact))
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    cfg = mild.SolverConfig(d=2, grid_points=64, delta=1.0, nodes=32)
    u, _ = mild.solve_mild(taylor_green(cfg.domain), cfg)
    du = mild.time_derivative(u, 1)
    tg = float(np.max((du + u * 2.0).l2_norms() / u.l2_norms()))
    ok = abs(slope - 2.0) <= 0.1 and tg <= 1e-8
    return slope, ok, {"fd_errors": errs, "taylor_green_residual": tg}


def scale_invariance(level):
    n = 16 if level == "quick" else 24
    spec = norms.MixedNormSpec(5, 5, 0, 0)
    base = mild.SolverConfig(d=3, grid_points=n, delta=0.1, nodes=16, grading=2.0)
    a = random_divfree(base.domain, 0.5, 2.0, seed=11)
    u, _ = mild.solve_mild(a, base)
    ref = norms.weighted_mixed_norm(u, spec)
    detail = {"reference": ref}
    worst = 0.0
    for lam in (2.0, 3.0):
        cfg = mild.SolverConfig(
            d=3,
            box_length=base.box_length / lam,
            grid_points=n,
            delta=base.delta / lam**2,
            nodes=16,
            grading=2.0,
        )
        a_lam = SpectralVectorField(cfg.domain, a.coeffs * lam)
        u_lam, _ = mild.solve_mild(a_lam, cfg)
        val = norms.weighted_mixed_norm(u_lam, spec)
        rel = abs(val / ref - 1)
        detail[f"lambda={lam:g}"] = {"norm": val, "rel": rel}
        worst = max(worst, rel)
    return worst, worst <= 1e-6, detail


def semigroup_bound(level):
    """Operator-norm proxy; the pinned constant for q in {d, d+2} is 2."""
    rng = np.random.default_rng(5)
    s_values = np.logspace(-3, 1, 9)
    worst = {}
    for d, n in ((2, 32), (3, 16)):
        dom = Domain(d, 2 * math.pi, n)
        for _ in range(20):
            f = _random_vector_field(dom, rng, decay=0.0)
            for s in s_values:
                for q in sorted({2, d, d + 2}):
                    r = stokes.projector_operator_ratio(f, s, q)
                    key = f"d={d},q={q}"
                    worst[key] = max(worst.get(key, 0.0), r)
    l2 = max(v for k, v in worst.items() if k.endswith("q=2"))
    rest = max(v for k, v in worst.items() if not k.endswith("q=2"))
    ok = l2 <= 1 + 1e-6 and rest <= 2.0
    return max(l2, rest), ok, worst


INTERPOLATION_BASELINE = 4.0
INTERPOLATION_PAIRS = ((1.0, 2.0), (0.5, 1.5), (1.0, 3.0))


def interpolation(level):
    grid = TimeGrid.graded(1.0, 24, 2.0)
    detail = {}
    for d, n, q in ((2, 32, 2), (3, 16, 3)):
        dom = Domain(d, 2 * math.pi, n)
        p = math.inf if q == d else 2 / (1 - d / q)
        vals = []
        for seed in range(10):
            U = mild.heat_trajectory(random_divfree(dom, 1.0, 1.0, seed=seed), grid)
            vals.append(max(norms.interpolation_check(U, m, k, q, p) for m, k in INTERPOLATION_PAIRS))
        detail[f"d={d},q={q}"] = max(vals)
    ok = detail["d=2,q=2"] <= 1 + 1e-8 and detail["d=3,q=3"] <= INTERPOLATION_BASELINE
    return detail["d=3,q=3"], ok, detail


def small_data_decay(level):
    if level == "quick":
        dom = Domain(3, 2 * math.pi, 16)
    else:
        dom = Domain(3, 4 * math.pi, 24)
    a = random_divfree(dom, 0.1, 2.0, seed=5)
    tr = mild.time_march(a, 50.0, 1000, record_every=10)
    t = tr.times
    g = np.array(
        [math.sqrt(ti) * norms.gradient_lq_sum(tr.state(i), 1, dom.d) for i, ti in enumerate(t)]
    )
    i1 = int(np.argmin(np.abs(t - 1.0)))
    ratio = float(g[i1:].max() / g[i1])
    return ratio, ratio <= 2.0, {"t_ref": float(t[i1]), "value_at_1": float(g[i1])}


def dealiasing_residual(level):
    """Divergence and convective forms must agree on full-band random data."""
    worst = 0.0
    for d, n in ((2, 32), (3, 16)):
        dom = Domain(d, 2 * math.pi, n)
        for seed in range(5):
            u = random_divfree(dom, 1.0, 1.0, seed=seed, cutoff=n // 2 - 1)
            a = spectral.flux_divergence(u, u)
            b = spectral.convective_term(u, u)
            worst = max(worst, _relative(b, a))
    return worst, worst <= 1e-8, {}


def empirical_smallness(level, amplitudes=None):
    """Largest amplitude (of a fixed data shape) for which Picard still contracts."""
    cfg = mild.SolverConfig(d=2, grid_points=16, delta=1.0, nodes=16, picard_max_iterations=30)
    shape = random_divfree(cfg.domain, 1.0, 2.0, seed=0)
    lo, hi = 0.0, None
    amp = 1.0
    for _ in range(12 if level == "full" else 8):
        try:
            _, rep = mild.solve_mild(shape * amp, cfg)
            good = rep.converged
        except mild.ContractionError:
            good = False
        if good:
            lo = amp
            amp = amp * 2 if hi is None else 0.5 * (amp + hi)
        else:
            hi = amp
            amp = 0.5 * (lo + amp)
    return lo, True, {"largest_contracting_amplitude": lo, "smallest_failing": hi}


CRITERIA = (
    ("C01", "taylor_green_exactness", taylor_green_exactness, "<= 1e-06", 1e-6, 10),
    ("C02", "projector_suite", projector_suite, "<= 1e-12", 1e-12, 1),
    ("C03", "kernel_norm_scaling", kernel_norm_scaling, "slope rel. err <= 0.02", 0.02, 30),
    ("C04", "kernel_far_field", kernel_far_field, "band <= 3", 3.0, 30),
    ("C05", "heat_smoothing_rates", heat_smoothing_rates, "slope rel. err <= 0.02", 0.02, 60),
    ("C06", "contraction_behaviour", contraction_behaviour, "ratios < 1, monotone, halving, <= 8 its", 1.0, 120),
    ("C07", "singular_refinement", singular_refinement, "relative change <= 0.05", 0.05, 600),
    ("C08", "time_derivative_recursion", time_derivative_recursion, "FD slope 2 +- 0.1", 0.1, 60),
    ("C09", "scale_invariance", scale_invariance, "<= 1e-06", 1e-6, 120),
    ("C10", "semigroup_bound", semigroup_bound, "<= 2 (q=2: <= 1+1e-6)", 2.0, 30),
    ("C11", "interpolation", interpolation, f"<= {INTERPOLATION_BASELINE:g} (q=2: <= 1+1e-8)", INTERPOLATION_BASELINE, 60),
    ("C12", "small_data_decay", small_data_decay, "<= 2", 2.0, 300),
    ("S01", "dealiasing_residual", dealiasing_residual, "<= 1e-08", 1e-8, 30),
)

INFO = (("I01", "empirical_smallness", empirical_smallness, "reported only", 0.0, 120),)


def run_criterion(key, level="quick", echo=None):
    for entry in CRITERIA + INFO:
        if entry[0] == key or entry[1] == key:
            return _run(entry, level, echo)
    raise KeyError(f"no criterion {key!r}")


def _run(entry, level, echo):
    key, name, fn, target, tol, budget = entry
    start = time.perf_counter()
    try:
        measured, ok, detail = fn(level)
    except Exception as exc:  # a crash is a failed verdict
        measured, ok, detail = math.nan, False, {"error": f"{type(exc).__name__}: {exc}"}
    seconds = time.perf_counter() - start
    res = CriterionResult(
        key, name, float(measured), target, tol, bool(ok) and seconds <= budget,
        seconds, budget, detail,
    )
    if seconds > budget:
        res.detail["over_budget"] = True
    if echo is not None:
        echo(res.line())
    return res


def acceptance_suite(level="quick", echo=print, only=None, include_info=True):
    """Run the criteria at ``level`` and return an :class:`AcceptanceSummary`."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    entries = CRITERIA + (INFO if include_info else ())
    if only is not None:
        entries = tuple(e for e in entries if e[0] in only or e[1] in only)
    results = [_run(e, level, echo) for e in entries]
    summary = AcceptanceSummary(level, results)
    if echo is not None:
        echo(summary.lines()[-1])
    return summary
