import math

import numpy as np
import pytest

from dce_entropy.cavity import (
    InstantaneousSpectrum,
    MirrorTrajectory,
    build_coupling_tables,
)
from dce_entropy.fock import (
    EffectiveHamiltonian,
    FockBasis,
    FockDensityOperator,
    NumericalValidityError,
    _hop_operator,
    _pair_create_operator,
    coherence_and_particles,
    diagonal_entropy,
    evolve_trajectory_vacuum,
    evolve_vacuum,
    perturbative_diagonal,
    von_neumann_entropy,
)


class TestFockBasis:
    def test_even_sector_size(self):
        basis = FockBasis.build(2, 4, even_only=True)
        # totals 0, 2, 4 with 2 modes: 1 + 3 + 5 states
        assert basis.dim == 9
        assert basis.states[0] == (0, 0)

    def test_full_basis_size(self):
        basis = FockBasis.build(2, 2, even_only=False)
        # totals 0, 1, 2: 1 + 2 + 3
        assert basis.dim == 6

    def test_total_quanta_parity(self):
        basis = FockBasis.build(3, 6, even_only=True)
        assert np.all(basis.total_quanta() % 2 == 0)


class TestOperators:
    def test_number_operator_diagonal(self):
        basis = FockBasis.build(2, 4, even_only=True)
        op = _hop_operator(basis, 1, 1)
        assert np.allclose(np.diag(op),
                           [occ[0] for occ in basis.states])

    def test_hop_matrix_element(self):
        basis = FockBasis.build(2, 4, even_only=True)
        op = _hop_operator(basis, 1, 2)  # b_1^dag b_2
        col = basis.index_map[(1, 1)]
        row = basis.index_map[(2, 0)]
        assert op[row, col] == pytest.approx(math.sqrt(1 * 2))

    def test_pair_create_element(self):
        basis = FockBasis.build(2, 4, even_only=True)
        op = _pair_create_operator(basis, 1, 1)  # (b_1^dag)^2
        col = basis.index_map[(0, 0)]
        row = basis.index_map[(2, 0)]
        assert op[row, col] == pytest.approx(math.sqrt(2))

    def test_hamiltonian_hermitian(self):
        tables = build_coupling_tables(16)
        spec = InstantaneousSpectrum(MirrorTrajectory(epsilon=1e-3, p=2, T=10.0))
        basis = FockBasis.build(3, 4)
        H = EffectiveHamiltonian(tables, spec, basis).matrix(0.37)
        assert np.allclose(H, H.conj().T, atol=1e-14)


class TestDensityOperator:
    def test_validation_rejects_bad_trace(self):
        basis = FockBasis.build(2, 2)
        rho = np.eye(basis.dim) * 0.9 / basis.dim
        with pytest.raises(NumericalValidityError):
            FockDensityOperator(basis, rho).validate()

    def test_entropies_on_known_state(self):
        basis = FockBasis.build(1, 2, even_only=True)  # states (0,), (2,)
        rho = np.diag([0.75, 0.25]).astype(complex)
        op = FockDensityOperator(basis, rho).validate()
        expected = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
        assert diagonal_entropy(op) == pytest.approx(expected)
        assert von_neumann_entropy(op) == pytest.approx(expected)


@pytest.fixture(scope="module")
def evolved():
    tables = build_coupling_tables(16)
    tr = MirrorTrajectory.nearest_complete_cycles(0.02, 1e-3, 2,
                                                  align_fundamental=True)
    rho = evolve_trajectory_vacuum(tr, tables, mode_count=4, n_max=4,
                                   tol=1e-9)
    return tr, rho.validate()


class TestEvolution:

    def test_purity_is_one(self, evolved):
        _, rho = evolved
        assert rho.purity() == pytest.approx(1.0, abs=1e-12)

    def test_coherence_equals_diagonal_entropy(self, evolved):
        # pure global state: relative entropy of coherence = S_d
        _, rho = evolved
        C, S_vn, _N = coherence_and_particles(rho)
        assert S_vn == pytest.approx(0.0, abs=1e-12)
        assert abs(C - diagonal_entropy(rho)) < 1e-12

    def test_particle_number_near_closed_form(self, evolved):
        tr, rho = evolved
        _C, _S, N = coherence_and_particles(rho)
        assert N == pytest.approx(tr.tau ** 2, rel=5e-3)

    def test_diagonal_matches_first_order_prediction(self, evolved):
        tr, rho = evolved
        beta = np.zeros((4, 4))
        beta[0, 0] = tr.tau
        predicted = perturbative_diagonal(rho.basis, beta)
        # vacuum and the dominant |2_1> weight agree at leading order
        diag = rho.diagonal()
        assert diag[0] == pytest.approx(predicted[0], abs=5e-6)
        idx = rho.basis.index_map[(2, 0, 0, 0)]
        assert diag[idx] == pytest.approx(predicted[idx], rel=2e-2)

    def test_zero_time_returns_vacuum(self):
        tables = build_coupling_tables(16)
        spec = InstantaneousSpectrum(MirrorTrajectory(epsilon=1e-3, p=2, T=1.0))
        basis = FockBasis.build(2, 2)
        rho = evolve_vacuum(tables, spec, basis, 0.0)
        assert rho.diagonal()[0] == pytest.approx(1.0)
