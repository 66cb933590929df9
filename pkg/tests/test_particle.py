import numpy as np
import pytest
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from selfstab import (Blowup, GibbsDensity, InvalidConfig, LinearCaseConfig,
                      SimConfig, SimOutput, empirical_vs_density,
                      find_invariant_means, simulate)
from selfstab.particle import interaction_drift_coeffs, pairwise_drift

OU_POTENTIAL = Polynomial([0.0, 0.0, 0.5])


def ou_config(**kw):
    base = dict(N=2000, epsilon=0.5, T=40.0, x0=0.0, seed=11,
                V=OU_POTENTIAL, dt=0.01)
    base.update(kw)
    return SimConfig(**base)


class TestConfig:
    def test_requires_potential(self):
        with pytest.raises(InvalidConfig):
            SimConfig(N=10, epsilon=0.1, T=1.0)

    def test_requires_particles(self):
        with pytest.raises(InvalidConfig):
            SimConfig(N=0, epsilon=0.1, T=1.0, V=OU_POTENTIAL)

    def test_burn_in_before_horizon(self):
        with pytest.raises(InvalidConfig):
            SimConfig(N=10, epsilon=0.1, T=1.0, burn_in=2.0, V=OU_POTENTIAL)

    def test_default_dt(self):
        cfg = SimConfig(N=10, epsilon=0.05, T=1.0, V=OU_POTENTIAL)
        assert cfg.resolved_dt == pytest.approx(0.005)
        cfg = SimConfig(N=10, epsilon=0.5, T=1.0, V=OU_POTENTIAL)
        assert cfg.resolved_dt == pytest.approx(0.01)


class TestDriftExactness:
    def test_moment_route_equals_pairwise(self):
        rng = np.random.Generator(np.random.Philox(17))
        for _ in range(5):
            n = int(rng.integers(2, 65))
            x = rng.uniform(-3.0, 3.0, n)
            df = Polynomial([0.0, rng.uniform(0, 2), 0.0, rng.uniform(0, 2),
                             0.0, rng.uniform(0, 1)])
            mom = np.array([np.mean(x**r) for r in range(6)])
            fast = npoly.polyval(x, interaction_drift_coeffs(df, mom))
            assert np.max(np.abs(fast - pairwise_drift(df, x))) <= 1e-10

    def test_single_particle_self_interaction_vanishes(self, quartic_spec):
        cfg = SimConfig(N=1, epsilon=0.25, T=1.0, x0=1.0, seed=3,
                        spec=quartic_spec, dt=0.01)
        cfg_free = SimConfig(N=1, epsilon=0.25, T=1.0, x0=1.0, seed=3,
                             V=quartic_spec.V.poly, dt=0.01)
        a = simulate(cfg).moment_series
        b = simulate(cfg_free).moment_series
        assert np.max(np.abs(a - b)) <= 1e-12


class TestStationaryStatistics:
    def test_ou_variance(self):
        out = simulate(ou_config())
        var = out.stationary_moments[1] - out.stationary_moments[0] ** 2
        assert abs(var - 0.25) <= 3.0 * out.stderr[1]

    def test_double_well_mean_matches_solver(self, quartic_spec):
        cfg = SimConfig(N=2000, epsilon=0.25, T=80.0, burn_in=20.0, x0=1.0,
                        seed=5, spec=quartic_spec, dt=0.01)
        out = simulate(cfg)
        solver = find_invariant_means(
            LinearCaseConfig(spec=quartic_spec, epsilon=0.25)).means[-1]
        assert abs(out.stationary_moments[0] - solver) <= 3.0 * out.stderr[0] + 0.02

    def test_histogram_count_invariant(self):
        out = simulate(ou_config(T=10.0))
        assert out.histogram_counts.sum() == 2000 * out.histogram_frames


class TestDeterminism:
    def test_bit_identical_replay(self):
        a = simulate(ou_config(T=5.0))
        b = simulate(ou_config(T=5.0))
        assert np.array_equal(a.moment_series, b.moment_series)
        assert np.array_equal(a.histogram_counts, b.histogram_counts)

    def test_seed_changes_stream(self):
        a = simulate(ou_config(T=5.0))
        b = simulate(ou_config(T=5.0, seed=12))
        assert not np.array_equal(a.moment_series, b.moment_series)

    def test_mirror_trajectory_exact(self, quartic_spec):
        steps = 100
        rng = np.random.Generator(np.random.Philox(23))
        z = rng.standard_normal((steps, 32))
        mk = lambda x0: SimConfig(N=32, epsilon=0.25, T=1.0, x0=x0, seed=0,
                                  spec=quartic_spec, dt=0.01, burn_in=0.0)
        plus = simulate(mk(1.0), noise=z)
        minus = simulate(mk(-1.0), noise=-z)
        assert np.array_equal(plus.moment_series[:, 0], -minus.moment_series[:, 0])
        assert np.array_equal(plus.moment_series[:, 1], minus.moment_series[:, 1])


class TestRefinement:
    def test_dt_halving_within_stderr(self, quartic_spec):
        # common random numbers: the coarse run uses pair-sums of the fine
        # noise, so the comparison isolates the discretization bias
        steps_fine = 4000
        rng = np.random.Generator(np.random.Philox(31))
        z_fine = rng.standard_normal((steps_fine, 500))
        z_coarse = (z_fine[0::2] + z_fine[1::2]) / np.sqrt(2.0)
        mk = lambda dt, z: simulate(SimConfig(N=500, epsilon=0.25, T=20.0, x0=1.0,
                                              seed=0, spec=quartic_spec, dt=dt,
                                              burn_in=4.0), noise=z)
        coarse = mk(0.01, z_coarse)
        fine = mk(0.005, z_fine)
        gap = abs(coarse.stationary_moments[0] - fine.stationary_moments[0])
        assert gap <= coarse.stderr[0]


class TestBlowup:
    def test_unstable_step_detected(self, quartic_spec):
        cfg = SimConfig(N=8, epsilon=0.25, T=50.0, x0=100.0, seed=1,
                        spec=quartic_spec, dt=0.5)
        with pytest.raises(Blowup):
            simulate(cfg)


class TestEmpiricalVsDensity:
    def test_density_against_itself(self):
        d = GibbsDensity.from_potential(OU_POTENTIAL, 0.5)
        edges = np.linspace(-3, 3, 101)
        centers = 0.5 * (edges[:-1] + edges[1:])
        probs = d.pdf(centers)
        counts = np.round(probs / probs.sum() * 1e6).astype(np.int64)
        fake = SimOutput(times=np.array([0.0]),
                         moment_series=np.array([[d.moment(1), d.moment(2)]]),
                         stationary_moments=np.array([d.moment(1), d.moment(2)]),
                         stderr=np.zeros(2), histogram_edges=edges,
                         histogram_counts=counts, histogram_frames=1)
        rep = empirical_vs_density(fake, d)
        assert np.all(rep.moment_distances <= 1e-12)
        assert rep.sup_cdf_distance <= 5e-3   # binning resolution only

    def test_ou_run_against_gaussian(self):
        out = simulate(ou_config(T=30.0, burn_in=5.0))
        d = GibbsDensity.from_potential(OU_POTENTIAL, 0.5)
        rep = empirical_vs_density(out, d)
        assert out.histogram_frames * 2000 >= 1_000_000
        assert rep.sup_cdf_distance <= 0.02

    def test_minus_branch_run(self, quartic_spec):
        cfg = SimConfig(N=1500, epsilon=0.25, T=60.0, burn_in=15.0, x0=-1.0,
                        seed=8, spec=quartic_spec, dt=0.01)
        out = simulate(cfg)
        lin = LinearCaseConfig(spec=quartic_spec, epsilon=0.25)
        m_star = find_invariant_means(lin).means[0]   # negative branch
        from selfstab import invariant_density

        d = invariant_density(lin, m_star).density
        rep = empirical_vs_density(out, d)
        assert np.all(rep.moment_distances <= 3.0 * out.stderr + 0.02)
