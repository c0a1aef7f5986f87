import math

import numpy as np
import pytest

from dce_entropy.cavity import ConfigurationError, MirrorTrajectory
from dce_entropy.perturbative import (
    RegimeError,
    beta_resonant_magnitude,
    bogoliubov_by_quadrature,
    diagonal_entropy_closed_form,
    diagonal_entropy_general,
    particle_number,
    resonant_beta_matrix,
    v_sum,
)


class TestBetaMagnitude:
    def test_resonant_linear_growth(self):
        assert beta_resonant_magnitude(1, 1, 2, 0.05, 1e-3) == pytest.approx(0.05)
        assert beta_resonant_magnitude(1, 2, 3, 0.1, 1e-3) == pytest.approx(
            math.sqrt(2) * 0.1)

    def test_off_resonant_bounded(self):
        eps = 1e-3
        env = 2 * math.sqrt(2) * eps * 2 / abs(4 - 9)
        for tau in np.linspace(0.001, 0.3, 17):
            assert beta_resonant_magnitude(1, 2, 2, tau, eps) <= env + 1e-15

    def test_zero_at_zero(self):
        assert beta_resonant_magnitude(3, 2, 5, 0.0, 1e-3) == 0.0

    def test_invalid_indices(self):
        with pytest.raises(ConfigurationError):
            beta_resonant_magnitude(0, 1, 2, 0.1, 1e-3)


class TestParticleNumber:
    @pytest.mark.parametrize("p,tau,expected", [
        (1, 0.1, 0.0),
        (2, 0.1, 0.01),
        (3, 0.1, 0.04),
        (5, 0.2, 5 * 24 * 0.04 / 6),
    ])
    def test_closed_form(self, p, tau, expected):
        assert particle_number(p, tau) == pytest.approx(expected)

    def test_matches_resonant_sum(self):
        # N = sum over the resonant set k + j = p of k*j*tau^2
        for p in (2, 3, 4, 6):
            tau = 0.07
            mags = resonant_beta_matrix(p, tau)
            assert float((mags ** 2).sum()) == pytest.approx(
                particle_number(p, tau), rel=1e-12)

    def test_large_tau_warns(self):
        with pytest.warns(UserWarning):
            particle_number(2, 0.5)


class TestVSum:
    def test_small_p(self):
        assert v_sum(1) == 0.0
        assert v_sum(2) == 0.0  # single term 1*1*ln(1)
        assert v_sum(3) == pytest.approx(2 * 2 * math.log(2))

    def test_p4(self):
        expected = 3 * math.log(3) + 4 * math.log(4) + 3 * math.log(3)
        assert v_sum(4) == pytest.approx(expected)


class TestDiagonalEntropy:
    def test_frozen_value_p2(self):
        # S_d(p=2, tau=0.1) with N = 0.01: 0.5*N*(1 - ln(N/2) + ln 1 - 0)
        assert diagonal_entropy_closed_form(2, 0.1) == pytest.approx(
            0.031491, abs=2e-6)

    def test_p1_is_zero(self):
        assert diagonal_entropy_closed_form(1, 0.2) == 0.0

    def test_closed_form_vs_general(self):
        for p in (2, 3, 4, 5, 6):
            for tau in (0.01, 0.05, 0.1):
                closed = diagonal_entropy_closed_form(p, tau)
                rep = diagonal_entropy_general(resonant_beta_matrix(p, tau))
                N = rep.N
                assert rep.S_d == pytest.approx(closed, rel=max(5 * N, 1e-12))

    def test_general_counts_pairs(self):
        rep = diagonal_entropy_general(resonant_beta_matrix(4, 0.05))
        # resonant set for p=4: (1,3), (2,2), (3,1)
        assert len(rep.per_pair_terms) == 3

    def test_regime_error(self):
        with pytest.raises(RegimeError):
            diagonal_entropy_general(np.array([[1.5]]))

    def test_negative_magnitude_rejected(self):
        with pytest.raises(ConfigurationError):
            diagonal_entropy_general(np.array([[-0.1]]))

    def test_monotone_in_p_at_fixed_tau(self):
        tau = 0.05
        values = [diagonal_entropy_closed_form(p, tau) for p in range(2, 7)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestQuadratureCrossCheck:
    def test_beta_matches_resonant_closed_form(self):
        tr = MirrorTrajectory.complete_cycles(math.pi, 1e-3, 2, 10)
        result = bogoliubov_by_quadrature(tr, k_max=6)
        tau = tr.tau
        b11 = abs(result.beta[0, 0])
        assert b11 == pytest.approx(tau, rel=5e-3)
        # non-resonant entries stay on the epsilon-scale envelope
        off = np.abs(result.beta).copy()
        off[0, 0] = 0.0
        assert off.max() < 20 * 1e-3

    def test_alpha_tilde_antisymmetric_phaseless_part(self):
        # A has zero diagonal, so the accumulated alpha~ diagonal stays small
        tr = MirrorTrajectory.complete_cycles(math.pi, 1e-3, 2, 4)
        result = bogoliubov_by_quadrature(tr, k_max=4)
        assert np.abs(np.diag(result.alpha_tilde)).max() < 1e-10
