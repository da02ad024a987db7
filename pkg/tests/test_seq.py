from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_fidelity
from dmrgqct.circuits import cost_report, simulate
from dmrgqct.mps import (
    fidelity,
    ghz_state,
    is_unitary,
    product_state,
    random_mps,
    to_statevector,
    zero_state,
)
from dmrgqct.seq import (
    BasisPolicy,
    SeqPlan,
    assemble_seq_circuit,
    complete_unitary,
    disentangle_step,
    layer_from_d2_mps,
    prepared_state,
    seq_prepare,
)


def test_complete_unitary_keeps_fixed_columns(rng):
    fixed = np.linalg.qr(rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))[0]
    for policy in (BasisPolicy(), BasisPolicy("random", 1)):
        u = complete_unitary(fixed, [0, 2], 4, policy, np.random.default_rng(0))
        assert is_unitary(u)
        assert np.allclose(u[:, [0, 2]], fixed)


def test_product_state_layer_is_local():
    layer = layer_from_d2_mps(product_state("1011"))
    c = layer.circuit()
    assert abs(fidelity(layer.apply(zero_state(4)), product_state("1011")) - 1) < 1e-12
    # every block maps |l 0> to a product of one-qubit columns
    for g in layer.blocks:
        col = g[:, 0].reshape(2, 2)
        assert np.linalg.matrix_rank(col, tol=1e-10) == 1
    assert len(c) == 3


def test_ghz_layer_reconstructs():
    layer = layer_from_d2_mps(ghz_state(4))
    out = simulate(layer.circuit())
    assert dense_fidelity(out, to_statevector(ghz_state(4))) > 1 - 1e-10


def test_basis_policy_changes_gates_not_state():
    s = random_mps(6, 2, seed=8)
    a = layer_from_d2_mps(s, BasisPolicy("random", 1))
    b = layer_from_d2_mps(s, BasisPolicy("random", 2))
    assert any(not np.allclose(x, y) for x, y in zip(a.blocks, b.blocks))
    va, vb = simulate(a.circuit()), simulate(b.circuit())
    assert dense_fidelity(va, vb) > 1 - 1e-10
    assert dense_fidelity(va, to_statevector(s)) > 1 - 1e-10


def test_layer_rejects_large_bond():
    with pytest.raises(ValueError):
        layer_from_d2_mps(random_mps(6, 4, seed=0))


def test_layer_apply_dual_path():
    layer = layer_from_d2_mps(random_mps(6, 2, seed=3))
    s = random_mps(6, 3, seed=4)
    for dagger in (False, True):
        mps_path = to_statevector(layer.apply(s, dagger=dagger))
        dense = layer.apply_dense(to_statevector(s), dagger=dagger)
        assert np.linalg.norm(mps_path - dense) < 1e-10


def test_disentangle_d2_target_gives_zero_state():
    _, residual = disentangle_step(random_mps(7, 2, seed=5), 16)
    assert fidelity(residual, zero_state(7)) > 1 - 1e-9


def test_disentangle_product_target():
    layer, residual = disentangle_step(product_state("0110"), 4)
    assert fidelity(residual, zero_state(4)) > 1 - 1e-12
    assert all(np.linalg.matrix_rank(g[:, 0].reshape(2, 2), tol=1e-10) == 1 for g in layer.blocks)


def test_disentangle_progresses_on_haf12(haf_ground):
    _, target = haf_ground(12)
    _, residual = disentangle_step(target, 64)
    assert fidelity(residual, zero_state(12)) > fidelity(target, zero_state(12))


def test_d2_target_single_layer_suffices():
    plan = seq_prepare(random_mps(8, 2, seed=2), 3, 8)
    assert plan.fidelity_trace[0] >= 1 - 1e-9
    assert all(f >= 1 - 1e-9 for f in plan.fidelity_trace)


def test_circuit_fidelity_matches_mps_path():
    target = random_mps(8, 4, seed=6)
    plan = seq_prepare(target, 6, 12)
    tvec = to_statevector(target)
    for k in range(1, 7):
        circ = simulate(assemble_seq_circuit(plan, k))
        assert abs(dense_fidelity(circ, tvec) - plan.fidelity_trace[k - 1]) < 1e-8
        assert abs(fidelity(prepared_state(plan, k), target) - plan.fidelity_trace[k - 1]) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_fidelity_non_decreasing_without_truncation(seed):
    plan = seq_prepare(random_mps(8, 8, seed=seed), 10, 16)
    f = plan.fidelity_trace
    assert all(a <= b + 1e-12 for a, b in zip(f, f[1:]))


def test_uncompressed_bond_growth_is_bounded(haf_ground):
    _, target = haf_ground(10)
    plan = seq_prepare(target, 6, 32)
    for k in range(1, 7):
        assert prepared_state(plan, k).max_bond <= min(2**k, 32)


def test_layer_blocks_are_unitary(haf_ground):
    _, target = haf_ground(8)
    plan = seq_prepare(target, 4, 8)
    assert all(is_unitary(g) for layer in plan.layers for g in layer.blocks)


@pytest.mark.parametrize("n", [4, 8])
def test_cnot_count_per_layer(n):
    plan = seq_prepare(random_mps(n, 4, seed=1), 3, 8)
    report = cost_report(assemble_seq_circuit(plan))
    assert report.cnot_count == 2 * (n - 1) * 3
    assert report.one_qubit_count <= 6 * (n - 1) * 3


def test_plan_json_round_trip():
    plan = seq_prepare(random_mps(6, 4, seed=1), 3, 8, BasisPolicy("random", 4))
    again = SeqPlan.loads(plan.dumps())
    assert again.fidelity_trace == plan.fidelity_trace and again.basis_policy == plan.basis_policy
    assert np.allclose(simulate(assemble_seq_circuit(again)), simulate(assemble_seq_circuit(plan)))


def test_truncated_plan():
    plan = seq_prepare(random_mps(6, 4, seed=1), 4, 8)
    assert len(plan.truncated(2).layers) == 2


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_policy_invariance_at_prepared_state(n, seed):
    s = random_mps(n, 2, seed=seed)
    a = simulate(layer_from_d2_mps(s, BasisPolicy()).circuit())
    b = simulate(layer_from_d2_mps(s, BasisPolicy("random", seed)).circuit())
    assert dense_fidelity(a, b) > 1 - 1e-10
