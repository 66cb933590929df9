import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from conftest import QUARTIC_V, riemann_moment
from selfstab import (GibbsDensity, NonconfiningPotential, ToleranceNotReached,
                      gibbs_expectation, gibbs_log_norm, gibbs_moment,
                      gibbs_moments)

DOUBLE_WELL = Polynomial(QUARTIC_V)


class TestLogNorm:
    @pytest.mark.parametrize("eps", [1.0, 0.25, 0.01])
    def test_gaussian(self, eps):
        # int exp(-x^2/eps) = sqrt(pi eps)
        assert gibbs_log_norm([0, 0, 0.5], eps) == pytest.approx(
            0.5 * math.log(math.pi * eps), abs=1e-12)

    def test_constant_shift(self):
        eps = 0.3
        base = gibbs_log_norm([0, 0, 0.5], eps)
        shifted = gibbs_log_norm([7.0, 0, 0.5], eps)
        assert shifted == pytest.approx(base - 14.0 / eps, abs=1e-12 * (1 + 14 / eps))

    def test_dual_rule_cross_check(self):
        a = gibbs_log_norm(DOUBLE_WELL, 0.25, tol=1e-11, rule="legendre")
        b = gibbs_log_norm(DOUBLE_WELL, 0.25, tol=1e-11, rule="tanhsinh")
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    def test_large_min_shift_no_overflow(self):
        # min W up to +-1e6 * eps must stay finite
        eps = 0.5
        for sign in (+1.0, -1.0):
            w = Polynomial([sign * 1e6 * eps, 0.0, 0.5])
            val = gibbs_log_norm(w, eps)
            assert math.isfinite(val)
            assert val == pytest.approx(0.5 * math.log(math.pi * eps)
                                        - 2.0 * sign * 1e6, rel=1e-12)

    def test_nonconfining_rejected(self):
        with pytest.raises(NonconfiningPotential):
            gibbs_log_norm([0, 0, 0, 1.0], 0.1)          # odd degree
        with pytest.raises(NonconfiningPotential):
            gibbs_log_norm([0, 0, -1.0], 0.1)             # negative leading

    def test_stalled_refinement_reported(self, monkeypatch):
        import selfstab.quadrature as q

        monkeypatch.setattr(q, "_NODE_LADDER", (2, 4))
        with pytest.raises(ToleranceNotReached):
            gibbs_log_norm(DOUBLE_WELL, 0.01, tol=1e-14)


class TestMoments:
    def test_odd_moment_of_even_density(self):
        assert gibbs_moment([0, 0, 0.5], 0.4, 1) == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("eps", [1.0, 0.2, 0.02])
    def test_gaussian_second_moment(self, eps):
        # density exp(-x^2/eps): variance eps/2
        assert gibbs_moment([0, 0, 0.5], eps, 2) == pytest.approx(eps / 2.0, rel=1e-11)

    def test_tilted_double_well_vs_riemann(self):
        w = [0.0, -0.5, -0.5, 0.0, 0.25]   # x^4/4 - x^2/2 - x/2
        got = gibbs_moment(w, 0.25, 1)
        oracle = riemann_moment(w, 0.25, 1)
        assert got == pytest.approx(oracle, abs=1e-8)

    def test_translation_covariance(self):
        # moments of W(x - c) are the binomially shifted moments of W(x)
        c = 0.8
        base = np.concatenate([[1.0], gibbs_moments(DOUBLE_WELL, 0.3, 4)])
        shifted = gibbs_moments(DOUBLE_WELL(Polynomial([-c, 1.0])), 0.3, 4)
        for k in range(1, 5):
            expect = sum(math.comb(k, j) * c ** (k - j) * base[j] for j in range(k + 1))
            assert shifted[k - 1] == pytest.approx(expect, abs=1e-9 * max(1, abs(expect)))

    def test_truncation_safety(self):
        for k in (0, 1, 2):
            a = gibbs_moment(DOUBLE_WELL, 0.25, k) if k else \
                gibbs_log_norm(DOUBLE_WELL, 0.25)
            b = gibbs_moment(DOUBLE_WELL, 0.25, k, radius_scale=1.25) if k else \
                gibbs_log_norm(DOUBLE_WELL, 0.25, radius_scale=1.25)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    def test_rule_family_agreement_random_suite(self):
        rng = np.random.Generator(np.random.Philox(91))
        tol = 1e-10
        for _ in range(12):
            deg = int(rng.integers(1, 6)) * 2
            coeffs = rng.uniform(-1.0, 1.0, deg + 1)
            coeffs[deg] = abs(coeffs[deg]) + 0.2
            eps = float(10.0 ** rng.uniform(-3, 0))
            kmax = int(rng.integers(1, 5))
            a = gibbs_moments(coeffs, eps, kmax, tol=tol, rule="legendre")
            b = gibbs_moments(coeffs, eps, kmax, tol=tol, rule="tanhsinh")
            assert np.all(np.abs(a - b) <= 10 * tol * np.maximum(1.0, np.abs(a)))


class TestExpectation:
    def test_constant(self):
        assert gibbs_expectation(DOUBLE_WELL, 0.25, [1.0]) == 1.0

    def test_centered_first_moment(self):
        w = [0.0, -0.5, -0.5, 0.0, 0.25]
        m1 = gibbs_moment(w, 0.25, 1)
        assert gibbs_expectation(w, 0.25, [-m1, 1.0]) == pytest.approx(0.0, abs=1e-10)

    def test_quadratic_on_gaussian(self):
        assert gibbs_expectation([0, 0, 0.5], 0.4, [0, 0, 1.0]) == pytest.approx(0.2, rel=1e-11)

    def test_linearity(self):
        w = DOUBLE_WELL
        f1, f2 = [0.0, 1.0, 2.0], [1.0, 0.0, -1.0, 0.5]
        combo = np.polynomial.polynomial.polyadd(f1, f2)
        assert gibbs_expectation(w, 0.3, combo) == pytest.approx(
            gibbs_expectation(w, 0.3, f1) + gibbs_expectation(w, 0.3, f2), rel=1e-10)


class TestGibbsDensity:
    def test_normalization(self):
        d = GibbsDensity.from_potential(DOUBLE_WELL, 0.25)
        assert d.norm_residual() <= 1e-10
        lo, hi = d.support_bounds()
        grid = np.linspace(lo, hi, 200001)
        total = np.trapezoid(d.pdf(grid), grid)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_pdf_finite_everywhere(self):
        d = GibbsDensity.from_potential(Polynomial([-50.0, 0, 0.5]), 0.1)
        x = np.linspace(-100, 100, 1001)
        assert np.all(np.isfinite(d.pdf(x)))

    def test_cdf_monotone(self):
        d = GibbsDensity.from_potential(DOUBLE_WELL, 0.25)
        x = np.linspace(-3, 3, 101)
        c = d.cdf(x)
        assert np.all(np.diff(c) >= 0)
        assert c[0] == pytest.approx(0.0, abs=1e-6)
        assert c[-1] == pytest.approx(1.0, abs=1e-6)
