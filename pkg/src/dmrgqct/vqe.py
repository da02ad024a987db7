"""Statevector VQE over a Trotterized excitation ansatz, plus reference-state helpers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .circuits import Circuit, simulate
from .dmrg import ground_state_dmrg
from .fermion import number_operator
from .mps import Mps, to_statevector
from .pauli import PauliSum, expectation
from .qct import CompiledAnsatz, ExcitationPool, OrbitalSplit

log = logging.getLogger(__name__)

FD_STEP = 1e-5


class _BudgetExhausted(Exception):
    pass


@dataclass
class VqeResult:
    energy: float
    thetas: np.ndarray
    evaluations: list[float] = field(default_factory=list)
    iterations: list[tuple[int, float, float]] = field(default_factory=list)  # (iter, energy, |grad|)
    budget_exhausted: bool = False
    converged: bool = True
    message: str = ""

    def __iter__(self):
        yield self.energy
        yield self.thetas
        yield self.evaluations


def finite_difference_gradient(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central differences ``(f(x + h e_k) - f(x - h e_k)) / 2h``."""
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def vqe_minimize(
    h: PauliSum,
    pool: ExcitationPool,
    reference: Circuit | np.ndarray,
    theta0=None,
    budget: int = 20000,
    *,
    step: float = FD_STEP,
    gtol: float = 1e-8,
) -> VqeResult:
    """BFGS minimization of ``<ref| U(theta)^dag H U(theta) |ref>``.

    Gradients are central finite differences.  Every energy evaluation
    (including those inside gradients) counts against ``budget``.  On
    exhaustion the best point seen is returned with ``budget_exhausted`` set.
    """
    ref = simulate(reference) if isinstance(reference, Circuit) else np.asarray(reference, dtype=complex)
    ref = ref / np.linalg.norm(ref)
    if ref.size != 1 << h.n:
        raise ValueError("reference dimension does not match the Hamiltonian")
    theta0 = np.zeros(len(pool)) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta0.size != len(pool):
        raise ValueError("theta0 length does not match the pool")
    hmat = h.to_sparse()
    if len(pool) == 0:
        e = float(np.vdot(ref, hmat @ ref).real)
        return VqeResult(e, theta0, [e], [], False, True, "empty pool")

    ansatz = CompiledAnsatz(pool, h.n)
    evals: list[float] = []
    best = {"e": np.inf, "x": theta0.copy()}

    cache: dict[bytes, float] = {}
    grad_cache: dict[bytes, np.ndarray] = {}

    def energy(x: np.ndarray) -> float:
        key = np.asarray(x, dtype=float).tobytes()
        if key in cache:
            return cache[key]
        if len(evals) >= budget:
            raise _BudgetExhausted
        psi = ansatz.apply(x, ref)
        e = float(np.vdot(psi, hmat @ psi).real)
        evals.append(e)
        cache[key] = e
        if e < best["e"]:
            best["e"], best["x"] = e, np.array(x, copy=True)
        return e

    def grad(x: np.ndarray) -> np.ndarray:
        key = np.asarray(x, dtype=float).tobytes()
        if key not in grad_cache:
            grad_cache[key] = finite_difference_gradient(energy, np.asarray(x, dtype=float), step)
        return grad_cache[key]

    iters: list[tuple[int, float, float]] = []

    def callback(xk):
        iters.append((len(iters), energy(xk), float(np.linalg.norm(grad(xk)))))

    e0 = energy(theta0)
    iters.append((0, e0, float("nan")))
    exhausted, converged, message = False, False, ""
    try:
        res = minimize(energy, theta0, jac=grad, method="BFGS", callback=callback,
                       options={"gtol": gtol, "maxiter": 10_000})
        converged, message = bool(res.success), str(res.message)
    except _BudgetExhausted:
        exhausted, message = True, f"evaluation budget {budget} exhausted"
    log.debug("VQE: %s after %d evaluations, E = %.12f", message, len(evals), best["e"])
    return VqeResult(best["e"], best["x"], evals, iters, exhausted, converged, message)


# ---------------------------------------------------------------- references


def embed_active_state(split: OrbitalSplit, active: np.ndarray | Mps) -> np.ndarray:
    """``|1...1>_core (x) |active> (x) |0...0>_virtual`` on ``2 * n_orbitals`` qubits."""
    vec = to_statevector(active) if isinstance(active, Mps) else np.asarray(active, dtype=complex).ravel()
    n_act = 2 * split.n_active
    if vec.size != 1 << n_act:
        raise ValueError("active state has the wrong dimension")
    n_core = 2 * split.n_core
    out = np.zeros(1 << split.n_qubits, dtype=complex)
    core_bits = (1 << n_core) - 1
    out[core_bits + (np.arange(vec.size) << n_core)] = vec
    return out


def active_hamiltonian(h: PauliSum, split: OrbitalSplit, penalty: float = 0.0) -> PauliSum:
    """``H`` with core qubits fixed to 1 and virtual qubits to 0, acting on the active qubits.

    With ``penalty > 0`` the term ``penalty (N - N_active)^2`` is added to pin
    the active electron count.
    """
    fixed = {q: 1 for q in split.qubits("c")} | {q: 0 for q in split.qubits("v")}
    ha = h.restrict(fixed)
    if penalty:
        if split.n_electrons_active is None:
            raise ValueError("a number penalty needs n_electrons_active")
        n_act = 2 * split.n_active
        dn = number_operator(n_act) - PauliSum.identity(n_act, split.n_electrons_active)
        ha = ha + dn * dn * penalty
    return ha


@dataclass
class ActiveReference:
    state: np.ndarray  # full register
    active_energy: float  # <H> of the embedded reference
    active_state: Mps | np.ndarray


def dmrg_active_reference(
    h: PauliSum, split: OrbitalSplit, d_max: int, *, penalty: float = 1.0, sweeps: int = 20, seed: int = 0
) -> ActiveReference:
    """DMRG ground state of the active-space Hamiltonian, embedded in the full register."""
    ha = active_hamiltonian(h, split, penalty if split.n_electrons_active is not None else 0.0)
    result = ground_state_dmrg(ha, d_max, sweeps, seed=seed)
    full = embed_active_state(split, result.state)
    return ActiveReference(full, expectation(h, full), result.state)


def particle_number_deviation(circuit_or_ansatz, n_qubits: int, thetas=None, trials: int = 3, seed: int = 0) -> float:
    """Largest ``|[U, N]|`` action on random states, for a Circuit or CompiledAnsatz."""
    rng = np.random.default_rng(seed)
    nmat = number_operator(n_qubits).to_sparse()
    worst = 0.0
    for _ in range(trials):
        v = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        v /= np.linalg.norm(v)
        if isinstance(circuit_or_ansatz, Circuit):
            run = lambda s: simulate(circuit_or_ansatz, s)
        else:
            run = lambda s: circuit_or_ansatz.apply(thetas, s)
        worst = max(worst, float(np.linalg.norm(run(nmat @ v) - nmat @ run(v))))
    return worst
