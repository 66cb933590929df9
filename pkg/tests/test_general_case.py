import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from conftest import QUARTIC_V, STEEP_V, random_valid_spec
from selfstab import (LinearCaseConfig, build_model, cramer_tau,
                      effective_potential, find_invariant_means,
                      find_outlying_moments, fixed_point_density,
                      mirror_moments, mirror_report, moment_map,
                      predicted_outlying_moments, psi, symmetric_invariant,
                      symmetric_scalar_map)
from selfstab.polys import coeffs_trimmed


class TestEffectivePotential:
    def test_zero_correction_at_dirac_moments(self, steep_spec):
        a = steep_spec.a
        m = np.array([a, a**2, a**3])
        w = effective_potential(steep_spec, m)
        expect = steep_spec.V.poly + steep_spec.F.poly(Polynomial([-a, 1.0]))
        assert np.allclose(coeffs_trimmed(w), coeffs_trimmed(expect), atol=1e-13)

    def test_linear_reduction_matches_tilted_potential(self, quartic_spec):
        # n = 1: W_m equals V + alpha x^2/2 - alpha m x up to a constant
        m1 = 0.63
        w = effective_potential(quartic_spec, np.array([m1]))
        alpha = quartic_spec.alpha
        expect = quartic_spec.V.poly + Polynomial([0.0, -alpha * m1, 0.5 * alpha])
        diff = coeffs_trimmed(w - expect)
        assert len(diff) == 1   # only the constant survives

    def test_symmetric_moments_give_even_potential(self, steep_spec):
        w = effective_potential(steep_spec, np.array([0.0, 0.7, 0.0]))
        c = w.coef
        assert np.allclose(c[1::2], 0.0, atol=1e-14)

    def test_length_checked(self, steep_spec):
        with pytest.raises(ValueError, match="length"):
            effective_potential(steep_spec, np.array([1.0]))


class TestMomentMap:
    def test_symmetric_input_zero_odd_output(self, steep_spec):
        out = moment_map(steep_spec, 0.2, np.array([0.0, 0.7, 0.0]))
        assert abs(out[0]) <= 1e-11 and abs(out[2]) <= 1e-11

    def test_linear_reduction_equals_psi(self, quartic_spec):
        cfg = LinearCaseConfig(spec=quartic_spec, epsilon=0.25)
        for m1 in (0.2, 0.9):
            got = moment_map(quartic_spec, 0.25, np.array([m1]))[0]
            assert got == pytest.approx(psi(cfg, m1), abs=1e-10)

    def test_dirac_limit(self, steep_spec):
        # at m_p = a^p the first component tends to a with an O(eps) defect
        a = steep_spec.a
        m = np.array([a, a**2, a**3])
        defects, eps_list = [], [0.1, 0.05, 0.025, 0.0125]
        for eps in eps_list:
            defects.append(abs(moment_map(steep_spec, eps, m)[0] - a))
        slope = np.polyfit(np.log(eps_list), np.log(defects), 1)[0]
        assert slope >= 0.8

    def test_mirror_equivariance(self, steep_spec):
        rng = np.random.Generator(np.random.Philox(11))
        m = np.array([1.0, 1.0, 1.0]) + rng.uniform(-0.05, 0.05, 3)
        left = moment_map(steep_spec, 0.1, mirror_moments(m))
        right = mirror_moments(moment_map(steep_spec, 0.1, m))
        assert np.all(np.abs(left - right) <= 1e-9)


class TestCramer:
    def test_reference_linear_case(self, quartic_spec):
        rep = cramer_tau(quartic_spec)
        assert rep.closed_form[0] == pytest.approx(0.25, abs=1e-15)
        assert rep.max_discrepancy <= 1e-12

    def test_steep_quartic_values(self, steep_spec):
        # k (60 - 20 (k-1)) / (4 * 20 * 21): 1/28, 1/21, 1/28
        rep = cramer_tau(steep_spec)
        assert np.allclose(rep.closed_form, [1 / 28, 1 / 21, 1 / 28], atol=1e-15)
        assert rep.max_discrepancy <= 1e-12

    def test_dual_path_on_random_specs(self):
        rng = np.random.Generator(np.random.Philox(202)); worst = 0.0
        for _ in range(50):
            rep = cramer_tau(random_valid_spec(rng))
            worst = max(worst, rep.max_discrepancy)
        assert worst <= 1e-9

    def test_interaction_curvature_identity(self):
        # sum_p ((-1)^p/(p-1)!) F^(p+1)(a) a^{p-1} telescopes to -F''(0)
        rng = np.random.Generator(np.random.Philox(303))
        for _ in range(20):
            spec = random_valid_spec(rng)
            a = spec.a
            total = sum(((-1.0) ** p / math.factorial(p - 1)) *
                        float(spec.F.deriv(p + 1)(a)) * a ** (p - 1)
                        for p in range(1, 2 * spec.n))
            assert total == pytest.approx(-spec.alpha, abs=1e-10 * (1 + abs(spec.alpha)))


class TestOutlyingMoments:
    def test_steep_quartic_localization(self, steep_spec):
        eps = 0.05
        rep = find_outlying_moments(steep_spec, eps, tol=1e-9)
        assert rep.converged and rep.residual <= 1e-9
        tau = cramer_tau(steep_spec).closed_form
        pred = predicted_outlying_moments(steep_spec, eps)
        assert np.all(np.abs(rep.m_star - pred) <= 0.5 * np.abs(tau) * eps)
        assert rep.meta["inside_refined_band"]

    def test_mirror_is_fixed_point(self, steep_spec):
        eps = 0.05
        rep = find_outlying_moments(steep_spec, eps, tol=1e-9)
        mirrored = mirror_report(steep_spec, eps, rep)
        assert mirrored.branch == "minus"
        assert mirrored.residual <= 1e-8
        phi = moment_map(steep_spec, eps, mirrored.m_star)
        assert np.max(np.abs(phi - mirrored.m_star)) <= 1e-8

    def test_linear_reduction_matches_scalar_solver(self, quartic_spec):
        eps = 0.25
        rep = find_outlying_moments(quartic_spec, eps, tol=1e-10)
        cfg = LinearCaseConfig(spec=quartic_spec, epsilon=eps)
        m_star = find_invariant_means(cfg).means[-1]
        assert rep.converged
        assert rep.m_star[0] == pytest.approx(m_star, abs=1e-8)

    def test_condition_violation_warns_but_runs(self):
        spec = build_model(QUARTIC_V, [0.0, 0.0, 0.0, 0.0, 0.25])
        rep = find_outlying_moments(spec, 0.1, tol=1e-8)
        assert not rep.condition.holds
        assert any("condition-violated" in w for w in rep.warnings)

    def test_self_consistency_at_tighter_quadrature(self, steep_spec):
        tol = 1e-9
        rep = find_outlying_moments(steep_spec, 0.05, tol=tol, quad_tol=1e-10)
        tight = moment_map(steep_spec, 0.05, rep.m_star, tol=1e-11)
        assert np.max(np.abs(tight - rep.m_star)) <= 10 * tol

    def test_predictor_converges_first_order(self, steep_spec):
        rels = []
        for eps in (0.1, 0.05, 0.025):
            rep = find_outlying_moments(steep_spec, eps, tol=1e-10)
            pred = predicted_outlying_moments(steep_spec, eps)
            rels.append(np.max(np.abs(rep.m_star - pred)) / eps)
        assert rels[2] < rels[1] < rels[0]


class TestPredictedMoments:
    def test_zero_noise_limit(self, steep_spec):
        assert np.allclose(predicted_outlying_moments(steep_spec, 0.0),
                           [1.0, 1.0, 1.0], atol=0)

    def test_reference_value(self, quartic_spec):
        assert predicted_outlying_moments(quartic_spec, 0.1)[0] == pytest.approx(
            0.975, abs=1e-15)


class TestSymmetricInvariant:
    def test_linear_case_needs_no_iteration(self, quartic_spec):
        rep = symmetric_invariant(quartic_spec, 0.25)
        assert rep.iterations == 0 and rep.converged
        assert rep.m_star[0] == 0.0
        assert rep.residual <= 1e-9

    @pytest.mark.parametrize("eps", [0.1, 0.25])
    def test_quartic_interaction_scalar_root(self, quartic_quartic_spec, eps):
        rep = symmetric_invariant(quartic_quartic_spec, eps, tol=1e-9)
        assert rep.converged and rep.branch == "symmetric"
        assert rep.m_star[0] == 0.0 and rep.m_star[2] == 0.0
        point = symmetric_scalar_map(quartic_quartic_spec, eps, rep.m_star[1])
        assert abs(point.chi) <= 1e-8

    def test_density_parity_and_normalization(self, quartic_quartic_spec):
        rep = symmetric_invariant(quartic_quartic_spec, 0.25)
        dens = fixed_point_density(quartic_quartic_spec, 0.25, rep.m_star)
        assert abs(dens.moment(1)) <= 1e-9
        assert abs(dens.moment(3)) <= 1e-9
        assert dens.norm_residual() <= 1e-10

    def test_scalar_map_strictly_decreasing(self, quartic_quartic_spec):
        for eps in (0.1, 0.25):
            for m2 in np.linspace(0.0, 2.0, 21):
                point = symmetric_scalar_map(quartic_quartic_spec, eps, float(m2))
                assert point.chi_prime <= -1.0
                # the printed-variance form is weaker but must also hold
                assert -1.5 * point.variance - 1.0 <= -1.0

    def test_scalar_map_derivative_matches_differences(self, quartic_quartic_spec):
        eps, h = 0.25, 1e-5
        for m2 in (0.3, 0.8):
            up = symmetric_scalar_map(quartic_quartic_spec, eps, m2 + h).m2_out
            dn = symmetric_scalar_map(quartic_quartic_spec, eps, m2 - h).m2_out
            fd = (up - dn) / (2 * h) - 1.0
            point = symmetric_scalar_map(quartic_quartic_spec, eps, m2)
            assert fd == pytest.approx(point.chi_prime, abs=1e-5)


class TestHigherDegreeSymmetric:
    def test_degree_six_interaction(self):
        # n = 3: two even unknowns, damped iteration path
        spec = build_model(STEEP_V, [0.0, 0.0, 0.5, 0.0, 0.25, 0.0, 0.01])
        rep = symmetric_invariant(spec, 0.2, tol=1e-8)
        assert rep.converged
        assert rep.m_star[0] == 0.0 and rep.m_star[2] == 0.0 and rep.m_star[4] == 0.0
        phi = moment_map(spec, 0.2, rep.m_star)
        assert np.max(np.abs(phi - rep.m_star)) <= 1e-7

    def test_degree_six_outlying(self):
        spec = build_model(STEEP_V, [0.0, 0.0, 0.5, 0.0, 0.25, 0.0, 0.01])
        rep = find_outlying_moments(spec, 0.05, tol=1e-8)
        assert rep.converged
        assert np.all(np.abs(rep.m_star - 1.0) < 0.2)
