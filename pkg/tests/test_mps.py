from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_fidelity, random_state, random_unitary
from dmrgqct.mps import (
    Mps,
    SizeGuardError,
    add_scaled,
    apply_two_site_gate,
    bond_profile,
    canonicalize,
    compress,
    dumps,
    fidelity,
    from_statevector,
    ghz_state,
    is_canonical,
    linear_combination,
    loads,
    norm,
    overlap,
    product_state,
    random_mps,
    schmidt_spectrum,
    to_statevector,
    zero_state,
)

SWAP = np.eye(4)[[0, 2, 1, 3]]


def aligned_close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    ov = np.vdot(a, b)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return np.linalg.norm(a * phase - b) < tol


# ---------------------------------------------------------------- conventions


def test_statevector_is_least_significant_first():
    vec = to_statevector(product_state([1, 0]))
    assert vec[1] == 1.0 and np.count_nonzero(vec) == 1


def test_from_statevector_round_trip(rng):
    v = random_state(7, rng)
    assert np.allclose(to_statevector(from_statevector(v)), v, atol=1e-12)


def test_random_mps_is_normalized_and_bounded():
    s = random_mps(6, 3, seed=0)
    assert abs(np.linalg.norm(to_statevector(s)) - 1) < 1e-12
    for j, d in enumerate(s.bond_dims, start=1):
        assert d <= min(3, 2**j, 2 ** (6 - j))


def test_adjacent_bonds_must_agree():
    with pytest.raises(ValueError):
        Mps([np.zeros((1, 2, 2)), np.zeros((3, 2, 1))])


def test_dense_size_guard():
    with pytest.raises(SizeGuardError):
        to_statevector(zero_state(40))


# ---------------------------------------------------------------- canonical form


def test_canonicalize_product_state_keeps_unit_bonds():
    s = canonicalize(product_state("0000"), 0)
    assert s.bond_dims == [1, 1, 1]
    assert np.allclose(to_statevector(s), to_statevector(product_state("0000")))


def test_canonicalize_preserves_vector():
    s = random_mps(6, 4, seed=3)
    c = canonicalize(s, 3)
    assert is_canonical(c)
    assert aligned_close(to_statevector(s), to_statevector(c), 1e-10)


def test_canonicalize_is_idempotent():
    c1 = canonicalize(random_mps(6, 4, seed=5), 3)
    c2 = canonicalize(c1, 3)
    for a, b in zip(c1.tensors, c2.tensors):
        assert np.allclose(a, b, atol=1e-12)


# ---------------------------------------------------------------- overlap and sums


def test_overlap_of_normalized_state_is_one():
    s = random_mps(8, 4, seed=1)
    assert abs(overlap(s, s) - 1) < 1e-12


def test_overlap_of_orthogonal_basis_states():
    assert overlap(product_state("0101"), product_state("0110")) == 0


def test_overlap_matches_dense():
    a, b = random_mps(8, 4, seed=1), random_mps(8, 3, seed=2)
    assert abs(overlap(a, b) - np.vdot(to_statevector(a), to_statevector(b))) < 1e-10


def test_add_scaled_zero_coefficient():
    a, b = random_mps(6, 3, seed=1), random_mps(6, 3, seed=2)
    out = add_scaled(a, 0.0, b)
    assert abs(overlap(a, out) - norm(a) ** 2) < 1e-12


def test_add_scaled_same_state_doubles():
    a = random_mps(6, 3, seed=1)
    assert abs(overlap(a, add_scaled(a, 1.0, a)) - 2 * norm(a) ** 2) < 1e-12


def test_add_scaled_matches_dense():
    a, b = random_mps(6, 3, seed=1), random_mps(6, 2, seed=2)
    dense = to_statevector(a) + 0.37 * to_statevector(b)
    assert np.linalg.norm(to_statevector(add_scaled(a, 0.37, b)) - dense) < 1e-10


def test_linear_combination_matches_dense():
    states = [random_mps(5, 2, seed=s) for s in range(3)]
    coeffs = [0.5, -1.2, 2.0j]
    dense = sum(c * to_statevector(s) for c, s in zip(coeffs, states))
    assert np.linalg.norm(to_statevector(linear_combination(states, coeffs)) - dense) < 1e-10


# ---------------------------------------------------------------- compression and spectra


def test_compress_without_truncation_is_identity():
    s = random_mps(6, 4, seed=7)
    out, err = compress(s, 8)
    assert err == 0
    assert aligned_close(to_statevector(s), to_statevector(out), 1e-12)


def test_compress_ghz_to_one():
    out, err = compress(ghz_state(6), 1)
    assert abs(fidelity(out, ghz_state(6)) - 0.5) < 1e-12
    assert abs(err - 0.5) < 1e-12


def test_compress_haf8_error_matches_dense_overlap(haf_ground):
    _, s = haf_ground(8)
    out, err = compress(s, 2)
    f_dense = dense_fidelity(to_statevector(out), to_statevector(s))
    assert abs((1 - err) - f_dense) < 1e-9
    assert out.max_bond <= 2


def test_compress_fidelity_non_increasing_in_bond():
    s = random_mps(8, 8, seed=11)
    fids = [fidelity(compress(s, d)[0], s) for d in (8, 6, 4, 3, 2, 1)]
    assert all(a >= b - 1e-12 for a, b in zip(fids, fids[1:]))


def test_schmidt_product_state():
    for cut in (1, 2, 3):
        assert np.allclose(schmidt_spectrum(product_state("0110"), cut).values, [1.0])


def test_schmidt_ghz_middle():
    assert np.allclose(schmidt_spectrum(ghz_state(6), 3).values, [1 / math.sqrt(2)] * 2)


def test_schmidt_haf10_matches_dense_svd(haf_ground):
    _, s = haf_ground(10)
    vec = to_statevector(s)
    # rows: qubits 5..9 (high bits), columns: qubits 0..4
    dense = np.linalg.svd(vec.reshape(32, 32), compute_uv=False)
    got = schmidt_spectrum(s, 5).values
    assert np.allclose(got, dense[: got.size], atol=1e-9)
    assert np.all(dense[got.size:] < 1e-6)


def test_bond_profile_ghz():
    assert bond_profile(ghz_state(5)) == [2, 2, 2, 2]


# ---------------------------------------------------------------- gates


def test_identity_gate():
    s = random_mps(5, 3, seed=1)
    assert abs(fidelity(apply_two_site_gate(s, np.eye(4), 2), s) - 1) < 1e-12


def test_swap_on_basis_state():
    out = apply_two_site_gate(product_state("01"), SWAP, 0)
    assert abs(fidelity(out, product_state("10")) - 1) < 1e-12


def test_gate_matches_dense(rng):
    s = random_mps(6, 3, seed=4)
    u = random_unitary(4, rng)
    site = 2
    vec = to_statevector(s).reshape((2,) * 6)  # axis k is qubit 5 - k
    # gate index 2 * i_site + i_next: site is the high digit
    ax_site, ax_next = 5 - site, 5 - (site + 1)
    g = u.reshape(2, 2, 2, 2)
    moved = np.moveaxis(vec, [ax_site, ax_next], [0, 1])
    applied = np.tensordot(g, moved, axes=([2, 3], [0, 1]))
    dense = np.moveaxis(applied, [0, 1], [ax_site, ax_next]).reshape(-1)
    got = to_statevector(apply_two_site_gate(s, u, site))
    assert np.linalg.norm(got - dense) < 1e-10


def test_gate_then_truncate_bounds_bond(rng):
    s = random_mps(6, 4, seed=4)
    out = apply_two_site_gate(s, random_unitary(4, rng), 2, d_max=2)
    assert out.bond_dims[2] <= 2


def test_serialization_round_trip():
    s = random_mps(5, 3, seed=9)
    assert np.allclose(to_statevector(loads(dumps(s))), to_statevector(s))


# ---------------------------------------------------------------- properties


small_mps = st.builds(
    lambda n, d, seed: random_mps(n, d, seed=seed),
    st.integers(2, 8), st.integers(1, 5), st.integers(0, 10**6),
)


@settings(max_examples=30, deadline=None)
@given(small_mps, st.integers(0, 7))
def test_canonicalization_preserves_norm(s, center):
    center = center % s.n_sites
    assert abs(abs(overlap(s, canonicalize(s, center))) - norm(s) ** 2) < 1e-10


@settings(max_examples=30, deadline=None)
@given(small_mps, st.integers(0, 10**6), st.floats(-3, 3))
def test_add_scaled_is_linear(a, seed, kappa):
    b = random_mps(a.n_sites, 2, seed=seed)
    chi = random_mps(a.n_sites, 3, seed=seed + 1)
    lhs = overlap(chi, add_scaled(a, kappa, b))
    assert abs(lhs - (overlap(chi, a) + kappa * overlap(chi, b))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(small_mps, st.integers(1, 7))
def test_schmidt_values_square_sum_to_one(s, cut):
    cut = 1 + (cut - 1) % (s.n_sites - 1)
    assert abs(np.sum(schmidt_spectrum(s, cut).values ** 2) - 1) < 1e-10
