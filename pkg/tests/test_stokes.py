import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsmild import stokes
from nsmild.data import taylor_green
from nsmild.spectral import Domain, SpectralVectorField, convective_term, derivative, lebesgue_norm

from conftest import field_from, random_field


def rel(a, b):
    return (a - b).l2() / max(b.l2(), 1e-300)


class TestHeatSemigroup:
    def test_identity_at_zero(self, dom2):
        f = random_field(dom2)
        assert stokes.heat_semigroup(f, 0) is f

    def test_eigenfield(self):
        dom = Domain(2, 2 * math.pi, 16)
        f = field_from(dom, lambda x, y: [0 * x, np.sin(x)])
        out = stokes.heat_semigroup(f, 1.0).physical()
        assert np.abs(out[1]).max() == pytest.approx(math.exp(-1), rel=1e-12)
        assert math.exp(-1) == pytest.approx(0.367879, abs=1e-6)

    def test_negative_time(self, dom2):
        with pytest.raises(ValueError):
            stokes.heat_semigroup(random_field(dom2), -1e-3)

    @given(s=st.floats(0, 2), t=st.floats(0, 2))
    def test_semigroup_property(self, s, t):
        dom = Domain(2, 2 * math.pi, 16)
        f = random_field(dom, 3)
        a = stokes.heat_semigroup(stokes.heat_semigroup(f, s), t)
        b = stokes.heat_semigroup(f, s + t)
        assert np.allclose(a.coeffs, b.coeffs, rtol=1e-13, atol=1e-300)

    @pytest.mark.parametrize("d,n", [(2, 128), (3, 48)])
    @pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
    def test_point_mass_matches_gaussian(self, d, n, q):
        dom = Domain(d, 2 * math.pi, n)
        c = np.zeros((d,) + dom.spectral_shape, dtype=complex)
        c[0] = 1.0 / dom.volume
        c[:, dom.nyquist_mask] = 0
        delta = SpectralVectorField(dom, c)
        t0 = 1.5 * dom.resolved_decay_time()
        for t in t0 * np.array([1.0, 3.0, 10.0]):
            got = lebesgue_norm(stokes.heat_semigroup(delta, t), q)
            assert got == pytest.approx(stokes.gaussian_lq_norm(d, t, q), rel=0.01)


class TestLeray:
    def test_gradient_annihilated(self):
        dom = Domain(2, 2 * math.pi, 16)
        f = field_from(dom, lambda x, y: [np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
        assert stokes.leray_project(f).l2() <= 1e-14 * f.l2()

    def test_solenoidal_unchanged(self):
        dom = Domain(2, 2 * math.pi, 16)
        tg = taylor_green(dom)
        assert rel(stokes.leray_project(tg), tg) <= 1e-15

    def test_longitudinal_mode(self):
        dom = Domain(2, 2 * math.pi, 16)
        f = field_from(dom, lambda x, y: [np.sin(x), 0 * x])
        assert stokes.leray_project(f).l2() <= 1e-14

    def test_mean_preserved(self, dom3):
        c = np.zeros((3,) + dom3.spectral_shape, complex)
        c[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        out = stokes.leray_project(SpectralVectorField(dom3, c))
        assert np.array_equal(out.mean_mode(), [1.0, 2.0, 3.0])

    @given(seed=st.integers(0, 2**32 - 1))
    def test_projector_properties(self, seed):
        dom = Domain(3, 2 * math.pi, 8)
        f = random_field(dom, seed)
        pf = stokes.leray_project(f)
        assert rel(stokes.leray_project(pf), pf) <= 1e-12
        assert pf.divergence().l2() <= 1e-12 * f.l2()
        alpha = (1, 0, 1)
        assert np.allclose(
            derivative(pf, alpha).coeffs,
            stokes.leray_project(derivative(f, alpha)).coeffs,
            rtol=1e-13,
            atol=1e-15 * np.abs(f.coeffs).max(),
        )

    def test_rejects_scalar(self, dom2):
        with pytest.raises(ValueError):
            stokes.leray_project(random_field(dom2, ncomp=1))


class TestStokesSemigroup:
    def test_zero_time_solenoidal(self):
        dom = Domain(2, 2 * math.pi, 16)
        tg = taylor_green(dom)
        assert rel(stokes.stokes_semigroup(tg, 0), tg) <= 1e-15

    @pytest.mark.parametrize("s", [0.0, 0.1, 3.0])
    def test_gradient_killed(self, s):
        dom = Domain(2, 2 * math.pi, 16)
        f = field_from(dom, lambda x, y: [np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
        assert stokes.stokes_semigroup(f, s).l2() <= 1e-14 * f.l2()

    def test_commutes_with_heat(self, dom2):
        f = random_field(dom2, 2)
        a = stokes.stokes_semigroup(f, 0.3)
        b = stokes.leray_project(stokes.heat_semigroup(f, 0.3))
        assert np.allclose(a.coeffs, b.coeffs, rtol=1e-14, atol=1e-17)

    def test_negative(self, dom2):
        with pytest.raises(ValueError):
            stokes.stokes_semigroup(random_field(dom2), -1)

    def test_l2_contraction(self, dom3):
        f = random_field(dom3, 4)
        for s in np.logspace(-3, 1, 5):
            assert stokes.projector_operator_ratio(f, s, 2) <= 1 + 1e-6


class TestOseenKernel:
    def test_symmetric_and_solenoidal_rows(self):
        dom = Domain(2, 2 * math.pi, 64)
        k = stokes.oseen_kernel_slice(dom, 0.2)
        assert np.array_equal(k.values[0, 1], k.values[1, 0])
        for i in range(2):
            row = SpectralVectorField.from_physical(dom, k.values[i])
            assert row.divergence().l2() <= 1e-12 * row.l2() * 64

    def test_self_similarity_with_doubled_box(self):
        small = stokes.oseen_kernel_slice(Domain(3, 2 * math.pi, 32), 0.2)
        big = stokes.oseen_kernel_slice(Domain(3, 4 * math.pi, 32), 0.8)
        # grid point j sits at y on the small box and 2y on the big one
        assert np.allclose(big.values, small.values / 8, rtol=0, atol=1e-12 * np.abs(small.values).max())

    def test_trace_integral(self):
        dom = Domain(3, 2 * math.pi, 32)
        k = stokes.oseen_kernel_slice(dom, 0.3)
        integral = sum(k.values[i, i].sum() for i in range(3)) * dom.cell_volume
        assert integral == pytest.approx(3.0, rel=1e-12)

    def test_far_field_band(self):
        dom = Domain(2, 2 * math.pi, 256)
        s = dom.resolved_decay_time()
        kslice = stokes.oseen_kernel_slice(dom, s)
        r, vals = kslice.radial_profile(1, 1)
        win = (r >= 5 * math.sqrt(s)) & (r <= 0.4 * dom.box_length)
        g = r[win] ** 2 * np.abs(vals[win])
        assert g.max() / g.min() <= 3

    @pytest.mark.parametrize("s", [0.0, -1.0, 1e-4])
    def test_unresolved_or_nonpositive_time(self, s):
        with pytest.raises(ValueError):
            stokes.oseen_kernel_slice(Domain(2, 2 * math.pi, 16), s)


class TestKernelGradientNorm:
    @pytest.mark.parametrize("d,q", [(2, 2), (2, 4), (3, 3), (3, 5)])
    def test_exact_rescaling(self, d, q):
        n = 32 if d == 2 else 16
        s = 0.5
        a = stokes.kernel_gradient_norm(Domain(d, 2 * math.pi, n), s, q)
        b = stokes.kernel_gradient_norm(Domain(d, 4 * math.pi, n), 4 * s, q)
        assert b / a == pytest.approx(4 ** (-(q + d) / (2 * q)), rel=1e-10)

    def test_slope_d2_q2(self):
        dom = Domain(2, 2 * math.pi, 128)
        s = dom.resolved_decay_time() * np.logspace(0, 1, 4)
        v = [stokes.kernel_gradient_norm(dom, si, 2) for si in s]
        slope = np.polyfit(np.log(s), np.log(v), 1)[0]
        assert slope == pytest.approx(-1.0, rel=0.02)

    @pytest.mark.parametrize("q", [1.5, 5.0])
    def test_q_range(self, q):
        with pytest.raises(ValueError):
            stokes.kernel_gradient_norm(Domain(2, 2 * math.pi, 32), 0.3, q)


class TestPressure:
    def test_zero(self, dom2):
        p = stokes.pressure_from_velocity(SpectralVectorField.zeros(dom2))
        assert p.l2() == 0

    def test_taylor_green_closed_form(self):
        dom = Domain(2, 2 * math.pi, 32)
        u = taylor_green(dom)
        p = stokes.pressure_from_velocity(u)
        x, y = dom.coordinates()
        expected = 0.25 * (np.cos(2 * x) + np.cos(2 * y))
        assert np.allclose(p.physical()[0], expected, atol=1e-14)

    def test_taylor_green_momentum_balance(self):
        # Taylor-Green keeps its shape, so grad p must cancel u.grad u exactly
        dom = Domain(2, 2 * math.pi, 32)
        u = taylor_green(dom)
        p = stokes.pressure_from_velocity(u)
        grad_p = SpectralVectorField(
            dom, np.stack([1j * k * p.coeffs[0] for k in dom.wavenumbers])
        )
        adv = convective_term(u, u)
        assert (grad_p + adv).l2() <= 1e-14 * adv.l2()

    def test_shear_flow(self):
        dom = Domain(2, 2 * math.pi, 16)
        u = field_from(dom, lambda x, y: [np.sin(y), 0 * x])
        assert stokes.pressure_from_velocity(u).l2() <= 1e-15

    def test_rejects_compressible(self):
        dom = Domain(2, 2 * math.pi, 16)
        f = field_from(dom, lambda x, y: [np.sin(x), 0 * x])
        with pytest.raises(ValueError):
            stokes.pressure_from_velocity(f)
