import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsmild.data import random_divfree
from nsmild.mild import heat_trajectory
from nsmild.norms import (
    MixedNormSpec,
    check_scaling_line,
    interpolation_check,
    product_norm,
    smoothing_rate_fit,
    time_lp_norm,
    weighted_mixed_norm,
    weighted_norm_terms,
)
from nsmild.spectral import Domain, SpectralVectorField, lebesgue_norm
from nsmild.trajectory import TimeGrid, Trajectory

from conftest import field_from


def constant_trajectory(domain, field, grid):
    return Trajectory(domain, grid, np.repeat(field.coeffs[None], len(grid), axis=0))


@pytest.fixture(scope="module")
def heat3():
    dom = Domain(3, 2 * math.pi, 16)
    a = random_divfree(dom, 1.0, 1.0, seed=2)
    return heat_trajectory(a, TimeGrid.graded(1.0, 24, 2.0))


class TestSpec:
    def test_parse(self):
        s = MixedNormSpec.parse("inf, 3, 1, 2")
        assert (s.p, s.q, s.m, s.n, s.delta) == (math.inf, 3.0, 1, 2, None)
        assert isinstance(s.n, int)
        s = MixedNormSpec.parse("5,5,0,1.5,0.25")
        assert s.n == 1.5 and s.delta == 0.25 and not s.integer_n

    @pytest.mark.parametrize("text", ["5,5,0", "5,5,-1,0", "5,5,0,-1", "5,5,0.5,0", "5,5,0,0,0", "a,5,0,0"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            MixedNormSpec.parse(text)

    def test_on_scaling_line(self):
        assert MixedNormSpec.on_scaling_line(3, 3).p == math.inf
        assert MixedNormSpec.on_scaling_line(3, 5).p == pytest.approx(5.0)
        assert MixedNormSpec.on_scaling_line(2, 4).p == pytest.approx(4.0)

    @pytest.mark.parametrize("d,p,q", [(3, 5, 5), (3, math.inf, 3), (2, 4, 4), (2, math.inf, 2), (3, 6, 4.5)])
    def test_admissible(self, d, p, q):
        check_scaling_line(d, p, q)

    @pytest.mark.parametrize("d,p,q", [(3, 5, 4), (3, 4, 6), (3, 10, 2.5), (2, 3, 6), (3, 7, 5)])
    def test_inadmissible(self, d, p, q):
        with pytest.raises(ValueError):
            check_scaling_line(d, p, q)

    def test_norm_rejects_off_line(self, heat3):
        with pytest.raises(ValueError):
            weighted_mixed_norm(heat3, MixedNormSpec(4, 4))


class TestTimeNorm:
    def test_constant_integrand(self):
        grid = TimeGrid.graded(2.0, 10, 2.0)
        assert time_lp_norm(np.ones(10), grid, 0.0, 3.0) == pytest.approx(2.0 ** (1 / 3), rel=1e-13)

    def test_power_weight_exact(self):
        # t^beta on a constant integrand integrates exactly per cell
        grid = TimeGrid.graded(1.0, 7, 1.5)
        beta, p = 0.75, 4.0
        assert time_lp_norm(np.ones(7), grid, beta, p) == pytest.approx((1 / (beta * p + 1)) ** (1 / p), rel=1e-13)

    def test_sup(self):
        grid = TimeGrid.graded(1.0, 4)
        assert time_lp_norm([1, 2, 3, 4], grid, 1.0, math.inf) == pytest.approx(4.0)
        assert time_lp_norm([4, 3, 2, 1], grid, 1.0, math.inf, delta=0.5) == pytest.approx(1.5)

    def test_delta_beyond_horizon(self):
        with pytest.raises(ValueError):
            time_lp_norm(np.ones(4), TimeGrid.graded(1.0, 4), 0, 2, delta=2.0)


class TestWeightedNorm:
    @pytest.mark.parametrize("d,q", [(2, 2), (2, 4), (3, 3), (3, 5)])
    def test_constant_field(self, d, q):
        n = 16 if d == 2 else 8
        dom = Domain(d, 2 * math.pi, n)
        g = field_from(dom, lambda *x: [0 * x[0] + 0.7] + [0 * x[0]] * (d - 1))
        grid = TimeGrid.graded(0.5, 12, 2.0)
        spec = MixedNormSpec.on_scaling_line(d, q)
        expected = lebesgue_norm(g, q) * (1.0 if math.isinf(spec.p) else 0.5 ** (1 / spec.p))
        got = weighted_mixed_norm(constant_trajectory(dom, g, grid), spec)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_decaying_sine_sup_norm(self):
        dom = Domain(2, 2 * math.pi, 16)
        base = field_from(dom, lambda x, y: [0 * x, np.sin(x)])
        grid = TimeGrid([0.25, 0.5], 1.0)
        coeffs = np.stack([base.coeffs * math.exp(-t) for t in grid.nodes])
        traj = Trajectory(dom, grid, coeffs)
        terms = weighted_norm_terms(traj, MixedNormSpec(math.inf, 2, 0, 1))
        # ||sin||_2 = ||cos||_2 = sqrt(2) pi; sup over t of t^(k/2) e^(-t) at t = 0.5
        s = math.sqrt(2) * math.pi
        assert terms[0, 0] == pytest.approx(s * math.exp(-0.25), rel=1e-12)
        assert terms[0, 1] == pytest.approx(math.sqrt(0.5) * s * math.exp(-0.5), rel=1e-12)

    def test_zero(self, dom2):
        grid = TimeGrid.graded(1.0, 6)
        traj = constant_trajectory(dom2, SpectralVectorField.zeros(dom2), grid)
        assert weighted_mixed_norm(traj, MixedNormSpec(4, 4, 1, 2)) == 0

    @pytest.mark.parametrize("spec", [MixedNormSpec(5, 5, 0, 1), MixedNormSpec(math.inf, 3, 1, 1)])
    def test_monotone_in_delta(self, heat3, spec):
        vals = [weighted_mixed_norm(heat3, MixedNormSpec(spec.p, spec.q, spec.m, spec.n, dl)) for dl in (0.1, 0.3, 1.0)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_triangle(self, heat3):
        other = heat3 * -0.5
        shifted = Trajectory(heat3.domain, heat3.grid, heat3.coeffs[:, :, ::-1].copy())
        spec = MixedNormSpec(5, 5, 0, 2)
        lhs = weighted_mixed_norm(other + shifted, spec)
        assert lhs <= weighted_mixed_norm(other, spec) + weighted_mixed_norm(shifted, spec) * (1 + 1e-12)

    def test_levels_nested(self, heat3):
        low = weighted_norm_terms(heat3, MixedNormSpec(5, 5, 0, 1))
        high = weighted_norm_terms(heat3, MixedNormSpec(5, 5, 1, 2))
        for key, val in low.items():
            assert high[key] == pytest.approx(val, rel=1e-14)
        assert set(high) == {(j, k) for j in range(2) for k in range(3)}

    def test_fractional_order(self, heat3):
        terms = weighted_norm_terms(heat3, MixedNormSpec(5, 5, 0, 1.5))
        assert list(terms) == [(0, 1.5)] and terms[0, 1.5] > 0


class TestRateFit:
    def test_constant_trajectory(self, dom2):
        f = random_divfree(dom2, 1.0, seed=1)
        grid = TimeGrid(1e-2 * np.logspace(0, 2, 12), 1.0)
        traj = constant_trajectory(dom2, f, grid)
        slope, r2 = smoothing_rate_fit(traj, 1, 2)
        assert slope == 0.0 and r2 == 1.0

    def test_single_mode_exponential(self):
        # ||e^(-t) sin||: log-slope is -t, fitted over a short early window
        dom = Domain(2, 2 * math.pi, 16)
        base = field_from(dom, lambda x, y: [0 * x, np.sin(x)])
        t = 1e-6 * np.logspace(0, 3, 16)
        traj = Trajectory(dom, TimeGrid(t, 1.0), np.stack([base.coeffs * math.exp(-s) for s in t]))
        slope, r2 = smoothing_rate_fit(traj, 0, 2)
        assert abs(slope) < 1e-3 and r2 >= 0

    def test_short_window(self, dom2):
        f = random_divfree(dom2, 1.0, seed=1)
        grid = TimeGrid(np.linspace(0.5, 1.0, 10), 1.0)
        with pytest.raises(ValueError):
            smoothing_rate_fit(constant_trajectory(dom2, f, grid), 0, 2)


class TestInterpolation:
    def test_bounded_by_one_for_q2(self):
        dom = Domain(2, 2 * math.pi, 32)
        tr = heat_trajectory(random_divfree(dom, 1.0, 1.0, seed=3), TimeGrid.graded(1.0, 24, 2.0))
        for m, n in ((1, 2), (0.5, 1.5), (1, 3)):
            assert interpolation_check(tr, m, n, 2, math.inf) <= 1 + 1e-8

    def test_approaches_one(self, heat3):
        ratio = interpolation_check(heat3, 1.999, 2.0, 3, math.inf)
        assert ratio == pytest.approx(1.0, rel=5e-3)

    def test_degenerate(self, dom2):
        traj = constant_trajectory(dom2, SpectralVectorField.zeros(dom2), TimeGrid.graded(1.0, 4))
        with pytest.raises(ValueError):
            interpolation_check(traj, 1, 2, 2, math.inf)

    @pytest.mark.parametrize("m,n", [(0, 1), (2, 1), (1, 1)])
    def test_orders(self, heat3, m, n):
        with pytest.raises(ValueError):
            interpolation_check(heat3, m, n, 3, math.inf)


class TestProductNorm:
    def test_zero(self, dom2):
        traj = constant_trajectory(dom2, SpectralVectorField.zeros(dom2), TimeGrid.graded(1.0, 4))
        assert product_norm(traj, (0, 1), 4, 4) == 0

    @given(lam=st.floats(0.1, 10), orders=st.sampled_from([(0, 0), (0, 1), (1, 1, 0), (2, 0, 1)]))
    def test_homogeneous(self, lam, orders):
        dom = Domain(2, 2 * math.pi, 16)
        traj = constant_trajectory(dom, random_divfree(dom, 1.0, seed=2), TimeGrid.graded(1.0, 6, 2.0))
        base = product_norm(traj, orders, 4, 4)
        scaled = product_norm(traj * lam, orders, 4, 4)
        assert scaled == pytest.approx(lam ** len(orders) * base, rel=1e-12)

    def test_two_zero_orders_is_squared_norm(self, dom2):
        f = random_divfree(dom2, 1.0, seed=2)
        traj = constant_trajectory(dom2, f, TimeGrid.graded(1.0, 6))
        # |u|^2 in L^q with time weight t^(1/2) on [0, 1] in L^inf
        expected = lebesgue_norm(f, 8) ** 2
        assert product_norm(traj, (0, 0), 4, 4) == pytest.approx(expected * (1 / 3) ** 0.25, rel=1e-12)

    @pytest.mark.parametrize("orders", [(0,), (0, 0, 0, 0), (0, -1)])
    def test_factor_count(self, dom2, orders):
        traj = constant_trajectory(dom2, random_divfree(dom2, 1.0), TimeGrid.graded(1.0, 4))
        with pytest.raises(ValueError):
            product_norm(traj, orders, 4, 4)
