import math

import numpy as np
import pytest

from dce_entropy import resonance
from dce_entropy.gaussian import (
    InvalidCovarianceError,
    ModeCovariance,
    TailBoundError,
    asymptotic_coefficients,
    mode_diagonal_entropy,
    populations,
    renyi2_entropy,
    variances_by_ode,
    variances_from_bogoliubov,
)


@pytest.fixture(scope="module")
def short_traj():
    taus = np.array([0.0, 0.01, 0.02, 0.03, 0.05, 0.08])
    return resonance.integrate(k_max=64, tau_end=0.08, tol=1e-12,
                               modes=(1, 3), taus=taus)


class TestCovariance:
    def test_vacuum(self):
        cov = ModeCovariance(m=1, tau=0.0, sigma_q=0.5, sigma_p=0.5)
        assert cov.det() == pytest.approx(0.25)
        assert cov.particle_number() == pytest.approx(0.0)

    def test_positivity_required(self):
        with pytest.raises(InvalidCovarianceError):
            ModeCovariance(m=1, tau=0.0, sigma_q=-0.5, sigma_p=0.5)

    def test_uncertainty_bound(self):
        with pytest.raises(InvalidCovarianceError):
            ModeCovariance(m=1, tau=0.0, sigma_q=0.1, sigma_p=0.1)


class TestVariancePaths:
    def test_direct_sum_at_zero(self):
        state = resonance.BogoliubovState.initial(16)
        cov = variances_from_bogoliubov(state, 1)
        assert cov.sigma_q == pytest.approx(0.5)
        assert cov.sigma_p == pytest.approx(0.5)

    def test_two_paths_agree_in_contained_window(self):
        # hard cutoff conserves the telescoped rate identity exactly until
        # the front reflects (tau ~ ln(2 k_max)/2 ~ 3.1 for k_max = 256)
        taus = np.array([0.0, 0.5, 1.0, 2.0])
        traj = resonance.integrate(k_max=256, tau_end=2.0, tol=1e-11,
                                   modes=(1,), taus=taus, use_absorber=False)
        covs = variances_by_ode(traj, 1)
        for cov in covs[1:]:
            a, b = traj.column(1, cov.tau)
            direct_q = 0.5 * float(((a - b) ** 2).sum())
            direct_p = 0.5 * float(((a + b) ** 2).sum())
            assert abs(direct_q - cov.sigma_q) < 1e-6
            assert abs(direct_p - cov.sigma_p) < 1e-6

    @pytest.mark.parametrize("m,mu", [(1, 0), (3, 1)])
    def test_short_time_laws(self, short_traj, m, mu):
        J = resonance.J_coefficient(mu)
        K = resonance.K_coefficient(mu)
        for cov in variances_by_ode(short_traj, m)[1:]:
            t = cov.tau
            law_q = 0.5 - t ** (2 * mu + 1) * J * J * (1 - K * K * t)
            law_p = 0.5 + t ** (2 * mu + 1) * J * J * (1 + K * K * t)
            slack = 5 * t ** (2 * mu + 3) + 1e-11
            assert cov.sigma_q == pytest.approx(law_q, abs=slack)
            assert cov.sigma_p == pytest.approx(law_p, abs=slack)

    def test_mode3_power_law_exponent(self, short_traj):
        covs = variances_by_ode(short_traj, 3)[1:]
        taus = np.array([c.tau for c in covs])
        dev = np.array([0.5 - c.sigma_q for c in covs])
        slope = np.polyfit(np.log(taus), np.log(dev), 1)[0]
        assert slope == pytest.approx(3.0, abs=0.1)

    def test_uncertainty_along_trajectory(self, short_traj):
        for m in (1, 3):
            for cov in variances_by_ode(short_traj, m):
                assert cov.det() >= 0.25 - 1e-10

    def test_particle_number_matches_short_time(self, short_traj):
        # N_1 ~ tau^2 for the resonant mode
        cov = variances_by_ode(short_traj, 1)[-1]
        assert cov.particle_number() == pytest.approx(cov.tau ** 2, rel=2e-2)


class TestPopulations:
    def test_vacuum_delta(self):
        pops = populations(ModeCovariance(m=1, tau=0.0, sigma_q=0.5, sigma_p=0.5))
        assert pops.probs[0] == pytest.approx(1.0)
        assert np.abs(pops.probs[1:]).max() < 1e-14
        assert mode_diagonal_entropy(pops) == pytest.approx(0.0, abs=1e-12)

    def test_thermal_geometric(self):
        sigma = 1.3
        pops = populations(ModeCovariance(m=1, tau=1.0, sigma_q=sigma,
                                          sigma_p=sigma))
        x = (2 * sigma - 1) / (2 * sigma + 1)
        geometric = (1 - x) * x ** np.arange(len(pops.probs))
        assert np.abs(pops.probs - geometric).max() < 1e-14

    def test_pure_squeezed_parity(self):
        # det = 1/4: pure squeezed state populates even n only
        pops = populations(ModeCovariance(m=1, tau=1.0, sigma_q=0.1,
                                          sigma_p=2.5))
        assert np.abs(pops.probs[1::2]).max() < 1e-14
        assert pops.normalization_defect() < 1e-10

    def test_zeroth_population_closed_form(self):
        cov = ModeCovariance(m=1, tau=2.0, sigma_q=0.3, sigma_p=3.0)
        w = (2 * 0.3 + 1) * (2 * 3.0 + 1)
        pops = populations(cov)
        assert pops.probs[0] == pytest.approx(2 / math.sqrt(w), rel=1e-14)

    def test_long_time_normalization(self):
        cov = ModeCovariance(m=1, tau=10.0, sigma_q=2 / math.pi ** 2,
                             sigma_p=160 / math.pi ** 2)
        pops = populations(cov)
        assert pops.normalization_defect() < 1e-8
        assert np.all(pops.probs > -1e-13)
        assert np.all(pops.probs <= 1.0)

    def test_fixed_n_cut_reports_tail(self):
        cov = ModeCovariance(m=1, tau=5.0, sigma_q=0.21, sigma_p=8.0)
        pops = populations(cov, n_cut=10)
        assert pops.tail_bound > 1e-6
        with pytest.raises(TailBoundError):
            mode_diagonal_entropy(pops)


class TestEntropies:
    def test_renyi_vacuum_offset(self):
        cov = ModeCovariance(m=1, tau=0.0, sigma_q=0.5, sigma_p=0.5)
        assert renyi2_entropy(cov) == pytest.approx(-math.log(2))

    def test_short_time_entropy_particle_law(self, short_traj):
        # S_d ~ (N/2)(1 - ln(N/2)) at leading order for the resonant mode
        cov = variances_by_ode(short_traj, 1)[-1]
        N = cov.particle_number()
        S = mode_diagonal_entropy(populations(cov))
        expected = 0.5 * N * (1 - math.log(0.5 * N))
        assert S == pytest.approx(expected, rel=2e-2)

    def test_entropy_grows_with_particles(self, short_traj):
        covs = variances_by_ode(short_traj, 1)[1:]
        entropies = [mode_diagonal_entropy(populations(c)) for c in covs]
        assert all(b > a for a, b in zip(entropies, entropies[1:]))


class TestAsymptoticCoefficients:
    def test_zeroth_coefficient(self):
        cov = ModeCovariance(m=1, tau=10.0, sigma_q=0.3, sigma_p=10.0)
        T = 1 / 0.6
        C, _ = asymptotic_coefficients(cov, 4)
        assert C[0] == pytest.approx(1 / math.sqrt(1 + T))

    def test_matches_closed_form_below_T1(self):
        from numpy.polynomial.legendre import legval
        T = 0.6
        cov = ModeCovariance(m=1, tau=1.0, sigma_q=1 / (2 * T), sigma_p=5.0)
        C, _ = asymptotic_coefficients(cov, 6)
        arg = 1 / math.sqrt(1 - T * T)
        for n in range(6):
            direct = (((1 - T) / math.sqrt(1 - T * T)) ** n
                      * legval(arg, [0] * n + [1]) / math.sqrt(1 + T))
            assert C[n] == pytest.approx(direct, abs=1e-13)

    def test_T1_continuous_limit(self):
        # closed form is 0*inf at T=1; recurrence gives the continuous limit
        cov = ModeCovariance(m=1, tau=0.0, sigma_q=0.5, sigma_p=0.5)
        C, _ = asymptotic_coefficients(cov, 3)
        assert C[0] == pytest.approx(1 / math.sqrt(2))
        assert C[1] == pytest.approx(1 / (2 * math.sqrt(2)))

    def test_script_S_grows_with_cutoff(self):
        cov = ModeCovariance(m=1, tau=10.0, sigma_q=2 / math.pi ** 2,
                             sigma_p=160 / math.pi ** 2)
        _, s1 = asymptotic_coefficients(cov, 64)
        _, s2 = asymptotic_coefficients(cov, 256)
        assert s2 > s1

    def test_populations_approach_coefficients(self):
        # rho^(n) -> C^(n) / sqrt(det Sigma) as sigma_p grows; the relative
        # correction is O(1/sigma_p), larger for higher n
        tau = 40.0
        cov = ModeCovariance(m=1, tau=tau, sigma_q=2 / math.pi ** 2,
                             sigma_p=16 * tau / math.pi ** 2)
        pops = populations(cov)
        C, _ = asymptotic_coefficients(cov, 4)
        pref = 1 / math.sqrt(cov.det())
        assert pops.probs[0] == pytest.approx(C[0] * pref, rel=0.02)
        for n in (1, 2):
            assert pops.probs[n] == pytest.approx(C[n] * pref, rel=0.15)
