"""Matrix product state preparation circuits and DMRG-based canonical-transformation ansatzes."""

from __future__ import annotations

__version__ = "0.1.0"

from .circuits import Circuit, CostReport, Gate, cost_report, pauli_gadget, simulate, synthesize_two_qubit_state_prep
from .dmrg import DmrgResult, Mpo, exact_diagonalize, ground_state_dmrg, mpo_from_pauli_sum
from .fermion import FermionOperator, jordan_wigner
from .lcu import LcuDecomposition, assemble_lcu_circuit, lcu_decompose, optimize_kappa, success_probability
from .molecular import MolecularIntegrals, load_fixture, molecular_hamiltonian, parse_fcidump, read_fcidump
from .mps import Mps, SizeGuardError, compress, fidelity, overlap
from .pauli import PauliString, PauliSum, haf_chain
from .qct import (
    Excitation,
    ExcitationPool,
    OrbitalSplit,
    build_gucc_pool,
    build_qct_pool,
    count_guccsd_parameters,
    count_qct_parameters,
    trotterized_ansatz,
)
from .seq import BasisPolicy, SeqLayer, SeqPlan, disentangle_step, layer_from_d2_mps, seq_prepare
from .vqe import VqeResult, vqe_minimize

__all__ = [
    "BasisPolicy", "Circuit", "CostReport", "DmrgResult", "Excitation", "ExcitationPool",
    "FermionOperator", "Gate", "LcuDecomposition", "MolecularIntegrals", "Mpo", "Mps",
    "OrbitalSplit", "PauliString", "PauliSum", "SeqLayer", "SeqPlan", "SizeGuardError",
    "VqeResult", "assemble_lcu_circuit", "build_gucc_pool", "build_qct_pool", "compress",
    "cost_report", "count_guccsd_parameters", "count_qct_parameters", "disentangle_step",
    "exact_diagonalize", "fidelity", "ground_state_dmrg", "haf_chain", "jordan_wigner",
    "layer_from_d2_mps", "lcu_decompose", "load_fixture", "molecular_hamiltonian",
    "mpo_from_pauli_sum", "optimize_kappa", "overlap", "parse_fcidump", "pauli_gadget",
    "read_fcidump", "seq_prepare", "simulate", "success_probability",
    "synthesize_two_qubit_state_prep", "trotterized_ansatz", "vqe_minimize",
]
