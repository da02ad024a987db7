from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from dmrgqct.fermion import FermionOperator, jordan_wigner, number_operator
from dmrgqct.molecular import (
    FcidumpError,
    MolecularIntegrals,
    hartree_fock_energy,
    load_fixture,
    molecular_hamiltonian,
    parse_fcidump,
    write_fcidump,
)
from dmrgqct.mps import from_statevector
from dmrgqct.pauli import PauliString, PauliSum, expectation, haf_chain, total_z

# ---------------------------------------------------------------- Pauli algebra


def test_letter_k_acts_on_qubit_k():
    m = PauliString("ZI").to_matrix()  # Z on qubit 0, the low bit
    assert np.allclose(np.diag(m), [1, -1, 1, -1])


def test_pauli_products():
    p = PauliString("X") * PauliString("Y")
    assert p.letters == "Z" and p.coeff == 1j


def test_pauli_sum_merges_and_prunes():
    h = PauliSum.from_strings(2, [("XX", 1.0), ("XX", -1.0), ("ZZ", 1e-13), ("YI", 2.0)])
    assert len(h) == 1 and h.coefficient("YI") == 2.0


def test_pauli_sum_order_independent():
    terms = [("XZ", 0.5), ("YY", -1.0), ("ZI", 2.0)]
    a = PauliSum.from_strings(2, terms)
    b = PauliSum.from_strings(2, terms[::-1])
    assert [s.letters for s in a] == [s.letters for s in b]
    assert a == b


def test_haf_two_sites():
    h = haf_chain(2)
    assert {s.letters: s.coeff for s in h} == {"XX": 1.0, "YY": 1.0, "ZZ": 1.0}
    assert np.isclose(np.linalg.eigvalsh(h.to_matrix())[0], -3.0)


def test_haf_term_count():
    assert len(haf_chain(3)) == 6


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_haf_commutes_with_total_z(n):
    h, sz = haf_chain(n).to_sparse(), total_z(n).to_sparse()
    assert abs(h @ sz - sz @ h).max() < 1e-12


def test_apply_matches_matrix(rng):
    h = PauliSum.from_strings(3, [("XYZ", 0.3), ("ZZI", -1.0), ("IYX", 0.7j)])
    v = random_state(3, rng)
    assert np.allclose(h.apply(v), h.to_matrix() @ v)


def test_expectation_z_on_zero():
    assert expectation(PauliSum.from_strings(1, [("Z", 1.0)]), np.array([1.0, 0.0])) == 1.0


def test_expectation_singlet():
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert np.isclose(expectation(haf_chain(2), singlet), -3.0)


def test_expectation_dual_path(rng):
    letters = "IXYZ"
    strings = ["".join(rng.choice(list(letters), 8)) for _ in range(20)]
    h = PauliSum.from_strings(8, [(s, rng.normal()) for s in strings])
    v = random_state(8, rng)
    assert abs(expectation(h, v) - expectation(h, from_statevector(v))) < 1e-9


def test_restrict_matches_projection():
    h = haf_chain(3)
    hr = h.restrict({0: 1})
    full = h.to_matrix()
    sub = full[np.ix_([1, 3, 5, 7], [1, 3, 5, 7])]  # qubit 0 set
    assert np.allclose(hr.to_matrix(), sub)


def test_serialization_round_trip():
    h = haf_chain(4) * 0.5
    assert PauliSum.loads(h.dumps()) == h


# ---------------------------------------------------------------- Jordan-Wigner


def test_number_operator_image():
    got = jordan_wigner(FermionOperator.excitation([0], [0]), 1)
    want = PauliSum.from_strings(1, [("I", 0.5), ("Z", -0.5)])
    assert got == want


def test_hopping_image():
    hop = FermionOperator.excitation([0], [1]) + FermionOperator.excitation([1], [0])
    want = PauliSum.from_strings(2, [("XX", 0.5), ("YY", 0.5)])
    assert jordan_wigner(hop, 2) == want


def test_anti_hermitian_generator_exponentiates_to_unitary():
    tau = FermionOperator.excitation([0], [1]) - FermionOperator.excitation([1], [0])
    t = jordan_wigner(tau, 2)
    assert t.is_anti_hermitian()
    u = scipy.linalg.expm(t.to_matrix())
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-10


@pytest.mark.parametrize("n", [2, 4, 6])
def test_canonical_anticommutation(n):
    ann = [jordan_wigner(FermionOperator.product([(j, False)]), n).to_matrix() for j in range(n)]
    cre = [a.conj().T for a in ann]
    eye = np.eye(2**n)
    for j in range(n):
        for k in range(n):
            anti = ann[j] @ cre[k] + cre[k] @ ann[j]
            assert np.linalg.norm(anti - (eye if j == k else 0)) < 1e-10
            assert np.linalg.norm(ann[j] @ ann[k] + ann[k] @ ann[j]) < 1e-10


def test_occupied_maps_to_one():
    n_op = number_operator(2).to_matrix()
    assert np.allclose(np.diag(n_op).real, [0, 1, 1, 2])


# ---------------------------------------------------------------- FCIDUMP and molecular


MINIMAL = """&FCI NORB=1, NELEC=1, MS2=1,
 ORBSYM=1,
 ISYM=1,
&END
 -1.0 1 1 0 0
 0.5 0 0 0 0
"""

TWO_ORBITAL = """&FCI NORB=2, NELEC=2, MS2=0,
&END
 0.7 2 1 1 1
 0.3 2 1 2 1
 -1.0 1 1 0 0
 -0.5 2 2 0 0
 0.0 0 0 0 0
"""


def test_minimal_fcidump():
    ints = parse_fcidump(MINIMAL)
    assert ints.one_body[0, 0] == -1.0 and ints.core_energy == 0.5
    assert ints.n_orbitals == 1 and ints.n_electrons == 1


def test_fcidump_symmetry_completion():
    g = parse_fcidump(TWO_ORBITAL).two_body
    perms = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    assert {g[p] for p in perms} == {0.7}
    for p in [(1, 0, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1), (0, 1, 0, 1)]:
        assert g[p] == 0.3
    assert parse_fcidump(TWO_ORBITAL).check_symmetry()


@pytest.mark.parametrize("bad", [
    "&FCI NORB=1, NELEC=1\n -1.0 1 1 0 0\n",  # unterminated header
    "&FCI NELEC=1,\n&END\n -1.0 1 1 0 0\n",  # no NORB
    "&FCI NORB=1, NELEC=1,\n&END\n -1.0 2 1 0 0\n",  # index out of range
    "&FCI NORB=1, NELEC=1,\n&END\n abc 1 1 0 0\n",  # non-numeric value
])
def test_fcidump_errors(bad):
    with pytest.raises(FcidumpError):
        parse_fcidump(bad)


def test_fcidump_write_round_trip():
    ints, _ = load_fixture("h4_sto3g")
    again = parse_fcidump(write_fcidump(ints))
    assert np.allclose(again.two_body, ints.two_body) and np.allclose(again.one_body, ints.one_body)
    assert again.core_energy == pytest.approx(ints.core_energy)


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_sto3g"])
def test_fixture_hartree_fock_energy(name):
    ints, refs = load_fixture(name)
    assert abs(hartree_fock_energy(ints) - refs["hf_energy"]) < 1e-8


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_sto3g"])
def test_fixture_fci_energy(name):
    ints, refs = load_fixture(name)
    h = molecular_hamiltonian(ints)
    assert h.is_hermitian()
    e0 = np.linalg.eigvalsh(h.to_matrix())[0]
    assert abs(e0 - refs["fci_energy"]) < 1e-8


def test_diagonal_hamiltonian_has_only_z_strings():
    n = 3
    ints = MolecularIntegrals(n, 2, 0.1, np.diag([-1.0, -0.5, 0.2]), np.zeros((n,) * 4))
    h = molecular_hamiltonian(ints)
    assert all(set(s.letters) <= {"I", "Z"} for s in h)


@pytest.mark.parametrize("name", ["h2_sto3g", "h4_sto3g"])
def test_hamiltonian_conserves_particle_number(name):
    ints, _ = load_fixture(name)
    h = molecular_hamiltonian(ints).to_sparse()
    n_op = number_operator(ints.n_qubits).to_sparse()
    assert abs(h @ n_op - n_op @ h).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.text("IXYZ", min_size=3, max_size=3), st.floats(-2, 2)), min_size=1, max_size=6))
def test_canonicalization_is_idempotent(terms):
    h = PauliSum.from_strings(3, terms)
    again = PauliSum.from_strings(3, [(s.letters, s.coeff) for s in h])
    assert [(s.letters, s.coeff) for s in again] == [(s.letters, s.coeff) for s in h]
