"""Test functions: time-domain splines, closed-form transforms, bounds."""

import math

import numpy as np
import pytest
from scipy import integrate

from conftest import fourier_quadrature, sinc
from spinflow.testfn import (
    BandSuppressed,
    SymmetricShift,
    TestFunction,
    bspline,
    certified_max_abs,
    certified_min,
    parse_test_function,
    profile_deriv_bound,
    regularity_norm,
    sinc_derivs,
    sinc_power_derivs,
)

H6 = TestFunction(6)
K7 = TestFunction(7, odd=True)


class TestTimeDomain:
    def test_outside_support_is_zero(self):
        assert H6.value(7.0) == 0.0
        assert H6.value(-6.0) == 0.0

    def test_odd_vanishes_at_zero(self):
        assert K7.value(0.0) == 0.0

    def test_centre_value_matches_inverse_transform(self):
        # B_6(0) = (1 / 2 pi) int sinc^6, evaluated independently of the spline code
        val, err = integrate.quad(lambda t: sinc(t) ** 6, 0.0, 4000.0, limit=4000)
        oracle = val / math.pi
        assert abs(H6.value(0.0) - oracle) <= 1e-10
        assert abs(H6.value(0.0) - 11.0 / 40.0) <= 1e-15

    def test_unit_mass(self):
        for n in (1, 2, 5, 8):
            val, _ = integrate.quad(lambda x: float(bspline(x, n)), -n, n, points=list(range(-n, n + 1)))
            assert abs(val - 1.0) < 1e-12

    @pytest.mark.parametrize("tf", [H6, K7, TestFunction(6, 3.1), TestFunction(8, None, 1.0625, True)])
    def test_parity(self, tf, rng):
        x = rng.uniform(-9, 9, 50)
        sign = -1.0 if tf.odd else 1.0
        assert np.allclose(tf.value(-x), sign * tf.value(x), atol=1e-15)

    def test_support_radius(self):
        assert TestFunction(8, None, 1.0625, True).support_radius == pytest.approx(8.5)
        x = 8.5 + 1e-9
        assert TestFunction(8, None, 1.0625, True).value(x) == 0.0


class TestFourier:
    def test_h6_at_zero(self):
        assert H6.fourier(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_modulated_at_zero(self):
        tf = TestFunction(6, 2.0)
        assert tf.fourier(0.0).real == pytest.approx(2.0 * sinc(2.0) ** 6, abs=1e-15)
        assert abs(fourier_quadrature(tf, [0.0])[0] - tf.fourier(0.0)) < 1e-12

    def test_k7_closed_form(self, rng):
        t = rng.uniform(0.1, 10, 40)
        closed = 7.0 * np.sin(t) ** 6 * (t * np.cos(t) - np.sin(t)) / t**8
        assert np.allclose((-1j * K7.fourier(t)).real, closed, rtol=1e-12, atol=1e-15)

    def test_k7_second_derivative_at_zero(self):
        val = (-1j * K7.fourier_deriv(0.0, 1)).real
        assert abs(val - (-7.0 / 3.0)) <= 1e-12

    def test_even_derivative_vanishes_at_zero(self):
        assert abs(H6.fourier_deriv(0.0, 1)) < 1e-15

    def test_derivative_matches_finite_difference(self):
        h, t = 1e-6, 1.3
        fd = (K7.fourier(t + h) - K7.fourier(t - h)) / (2 * h)
        an = K7.fourier_deriv(t, 1)
        assert abs(fd - an) <= 1e-6 * abs(an)

    def test_stretch_chain_rule(self):
        lam = 1.0625
        k8 = TestFunction(8, odd=True)
        k8s = TestFunction(8, None, lam, True)
        t = np.linspace(-3, 3, 13)
        assert np.allclose(k8s.fourier(t), lam * k8.fourier(lam * t), atol=1e-15)
        assert np.allclose(k8s.fourier_deriv(t, 1), lam**2 * k8.fourier_deriv(lam * t, 1), atol=1e-14)

    @pytest.mark.parametrize("tf", [H6, K7, TestFunction(7, 3.1), TestFunction(8, 0.0, 1.0625, True)])
    def test_pair_against_quadrature(self, tf):
        t = np.linspace(-10, 10, 41)
        assert np.max(np.abs(fourier_quadrature(tf, t) - tf.fourier(t))) <= 1e-8

    def test_real_and_imaginary(self, rng):
        t = rng.uniform(-10, 10, 30)
        assert np.all(H6.fourier(t).imag == 0)
        assert np.all(K7.fourier(t).real == 0)

    def test_nonnegativity(self, rng):
        t = rng.uniform(-30, 30, 5000)
        for n in (2, 4, 6, 8):
            tf = TestFunction(n)
            assert tf.is_fourier_nonnegative()
            assert np.all(tf.fourier(t).real >= 0)
        assert not K7.is_fourier_nonnegative()

    def test_series_and_closed_form_agree_at_switch(self):
        # both branches of the sinc-derivative evaluation meet continuously at |t| = 2
        lo = sinc_derivs(np.array([2.0 - 1e-12]), 4)
        hi = sinc_derivs(np.array([2.0 + 1e-12]), 4)
        assert np.allclose(lo, hi, rtol=1e-10, atol=1e-12)

    def test_sinc_power_derivatives(self):
        t = np.array([0.0, 0.3, 2.5])
        d = sinc_power_derivs(t, 7, 2)
        assert d[0] == pytest.approx(sinc(t) ** 7, abs=1e-15)
        assert d[2][0] == pytest.approx(-7.0 / 3.0, abs=1e-14)


class TestSecondDerivative:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 3.0, 7.25])
    def test_modulated_family(self, nu):
        assert -TestFunction(6, nu).second_deriv_at_zero() == pytest.approx(11 / 20 * nu**2 + 0.25, abs=1e-12)

    def test_example_value(self):
        assert TestFunction(6, 3.0).second_deriv_at_zero() == pytest.approx(-5.2, abs=1e-12)

    def test_stretch_scaling(self):
        base = TestFunction(6, 0.0).second_deriv_at_zero()
        assert TestFunction(6, 0.0, 2.0).second_deriv_at_zero() == pytest.approx(base / 4, abs=1e-15)

    def test_odd_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            K7.second_deriv_at_zero()


class TestRegularity:
    def test_k7_finite(self):
        assert math.isfinite(regularity_norm(K7, 2.6))

    def test_k8_finite(self):
        assert math.isfinite(regularity_norm(TestFunction(8), 2.6))

    def test_divergent(self):
        with pytest.raises(ValueError, match="diverges"):
            regularity_norm(TestFunction(2), 4.0)

    def test_delta_range(self):
        with pytest.raises(ValueError):
            regularity_norm(K7, 2.5)

    def test_estimate_dominates_quadrature(self):
        # the tail term makes the estimate an upper bound for a longer quadrature
        short = regularity_norm(TestFunction(8), 2.6, T=50.0)
        long_q = regularity_norm(TestFunction(8), 2.6, T=400.0)
        assert short >= long_q * (1 - 1e-12)


class TestBounds:
    def test_sinc6_minima(self):
        assert certified_min(H6, 0.0, 0.5) >= 0.777
        assert certified_min(H6, 0.0, 0.04715) >= 0.9977

    def test_certified_min_is_below_samples(self, rng):
        t = rng.uniform(0, 0.8, 10000)
        assert certified_min(H6, 0.0, 0.8) <= H6.profile(t).min()

    def test_certified_max_above_samples(self, rng):
        t = rng.uniform(2.7, 3.7, 10000)
        assert certified_max_abs(K7, 2.7, 3.7, 1) >= np.abs(K7.profile_deriv(t, 1)).max()

    def test_profile_bounds(self, rng):
        t = rng.uniform(-20, 20, 20000)
        for order in range(3):
            assert profile_deriv_bound(K7, order) >= np.abs(K7.profile_deriv(t, order)).max()


class TestIds:
    @pytest.mark.parametrize("text", ["conv6", "conv7_x", "conv6_mod:3.1", "conv8_x_stretch:1.0625",
                                      "conv8_x_mod:0.0_stretch:1.0625"])
    def test_roundtrip(self, text):
        tf = parse_test_function(text)
        assert tf.id == text
        assert TestFunction.parse(tf.id) == tf

    def test_bad_id(self):
        with pytest.raises(ValueError):
            parse_test_function("gauss3")

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            TestFunction(0)
        with pytest.raises(ValueError):
            TestFunction(6, stretch=-1.0)


class TestDerivedFunctions:
    def test_symmetric_shift_profile(self, rng):
        base = TestFunction(4, stretch=0.4)
        sh = SymmetricShift(base, 0.9)
        t = rng.uniform(-5, 5, 20)
        assert np.allclose(sh.profile(t), base.profile(t) * np.cos(0.9 * t), atol=1e-15)

    def test_band_suppressed_profile(self, rng):
        L = 0.3
        g = BandSuppressed(H6, L)
        t = rng.uniform(-3, 3, 20)
        assert np.allclose(g.profile(t), H6.profile(t) * (1 - t**2 / L**2), atol=1e-13)
