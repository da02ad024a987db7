from __future__ import annotations

import numpy as np
import pytest

from dmrgqct.dmrg import exact_diagonalize, ground_state_dmrg, mpo_from_pauli_sum
from dmrgqct.molecular import hartree_fock_bits, load_fixture, molecular_hamiltonian
from dmrgqct.mps import SizeGuardError, to_statevector
from dmrgqct.pauli import PauliSum, expectation, haf_chain


def random_hermitian_sum(n: int, n_terms: int, rng: np.random.Generator) -> PauliSum:
    strings = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(n_terms)]
    return PauliSum.from_strings(n, [(s, rng.normal()) for s in strings])


def test_mpo_single_string():
    h = PauliSum.from_strings(2, [("ZZ", 1.0)])
    assert np.allclose(mpo_from_pauli_sum(h).to_matrix(), np.diag([1, -1, -1, 1]))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_mpo_haf_matches_dense(n):
    h = haf_chain(n)
    assert np.linalg.norm(mpo_from_pauli_sum(h).to_matrix() - h.to_matrix()) < 1e-10


def test_mpo_haf_bond_dimension_is_five():
    assert max(mpo_from_pauli_sum(haf_chain(10)).bond_dims) == 5


def test_mpo_empty_sum_is_zero():
    m = mpo_from_pauli_sum(PauliSum.zero(3))
    assert np.allclose(m.to_matrix(), 0)


def test_mpo_molecular_matches_dense():
    ints, _ = load_fixture("h2_sto3g")
    h = molecular_hamiltonian(ints)
    assert np.linalg.norm(mpo_from_pauli_sum(h).to_matrix() - h.to_matrix()) < 1e-10


def test_exact_diagonalize_z():
    e, v = exact_diagonalize(PauliSum.from_strings(1, [("Z", 1.0)]))
    assert e == pytest.approx(-1.0)
    assert abs(abs(v[1]) - 1) < 1e-12


def test_exact_diagonalize_haf3():
    e, _ = exact_diagonalize(haf_chain(3))
    assert e == pytest.approx(-4.0, abs=1e-12)


def test_exact_diagonalize_guard():
    with pytest.raises(SizeGuardError):
        exact_diagonalize(haf_chain(16))


def test_dmrg_singlet():
    res = ground_state_dmrg(haf_chain(2), 2)
    assert abs(res.energy + 3) < 1e-9


@pytest.mark.parametrize("n", [8, 10])
def test_dmrg_haf_matches_exact(n):
    e0, _ = exact_diagonalize(haf_chain(n))
    res = ground_state_dmrg(haf_chain(n), 32)
    assert abs(res.energy - e0) < 1e-8 * abs(e0)


def test_dmrg_h2_fixture():
    ints, refs = load_fixture("h2_sto3g")
    res = ground_state_dmrg(molecular_hamiltonian(ints), 4)
    assert abs(res.energy - refs["fci_energy"]) < 1e-8


def test_dmrg_accepts_occupation_start():
    ints, refs = load_fixture("h2_sto3g")
    res = ground_state_dmrg(molecular_hamiltonian(ints), 4, initial=hartree_fock_bits(4, 2))
    assert abs(res.energy - refs["fci_energy"]) < 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_dmrg_random_sums_match_exact(seed):
    rng = np.random.default_rng(100 + seed)
    h = random_hermitian_sum(8, 24, rng)
    e0, _ = exact_diagonalize(h)
    res = ground_state_dmrg(h, 16, 30, seed=seed)
    assert abs(res.energy - e0) < 1e-8 * max(1.0, abs(e0))


def test_dmrg_monotone_in_bond_dimension():
    h = haf_chain(12)
    energies = [ground_state_dmrg(h, d).energy for d in (2, 4, 8, 16)]
    assert all(a >= b - 1e-10 for a, b in zip(energies, energies[1:]))


@pytest.mark.parametrize("d_max", [2, 4, 8])
def test_dmrg_sweep_energies_non_increasing(d_max):
    ints, _ = load_fixture("h4_sto3g")
    res = ground_state_dmrg(molecular_hamiltonian(ints), d_max, 12)
    e = res.sweep_energies
    assert all(a >= b - 1e-12 for a, b in zip(e, e[1:]))


def test_reported_energy_is_state_expectation():
    h = haf_chain(8)
    state, energy = ground_state_dmrg(h, 4)
    assert abs(expectation(h, to_statevector(state)) - energy) < 1e-10
    assert state.max_bond <= 4


def test_dmrg_is_seed_reproducible():
    h = haf_chain(6)
    a = ground_state_dmrg(h, 4, seed=3)
    b = ground_state_dmrg(h, 4, seed=3)
    assert a.sweep_energies == b.sweep_energies


def test_dmrg_rejects_non_hermitian():
    h = PauliSum.from_strings(2, [("XY", 1j)])
    with pytest.raises(ValueError):
        ground_state_dmrg(h, 2)
