"""Linear combination of unitaries: ``|psi> ~ sum_i kappa_i U_i |0...0>``.

Each ``U_i`` is a single sequential layer preparing a bond-dimension-2 state
``r_i``.  Terms are found greedily.  The target is projected on the current
approximation, the difference is truncated to bond dimension 2, and its
weight ``kappa_i >= 0`` is chosen to maximize the normalized overlap with
the target, after a global phase of the residual that makes a non-negative
weight optimal.

In the circuit, an ancilla register is prepared by ``B`` with amplitudes
``sqrt(kappa_t / sum kappa)``, the layers are applied under gray-ordered
ancilla patterns, and ``B^dagger`` closes.  Post-selecting the ancillas on
zero leaves ``sum_t kappa_t U_t|0> / sum_t kappa_t`` on the system register.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, controlled, simulate
from .mps import (
    Mps,
    add_scaled,
    canonicalize,
    compress,
    linear_combination,
    normalize,
    overlap,
    zero_state,
)
from .seq import BasisPolicy, SeqLayer, complete_unitary, layer_from_d2_mps

ZERO_RESIDUAL = 1e-12
KAPPA_CAP = 1e6
MAX_REGISTER = 64
PHASE_RULES = ("optimal", "target")


def _phase_align(state: Mps, reference: Mps) -> Mps:
    """Copy of ``state`` rotated so ``<reference|state>`` is real and non-negative."""
    ov = overlap(reference, state)
    if abs(ov) == 0:
        return state
    return state.scaled(abs(ov) / ov)


def optimal_phase(target: Mps, current: Mps, residual: Mps) -> complex:
    """Unit phase ``w`` such that the best complex ``k`` for ``current + k residual`` is ``|k| w``.

    The best state in ``span{current, residual}`` has coefficients
    ``G^-1 u`` with Gram matrix ``G`` and ``u_i = <s_i|target>``.  Rotating the
    residual by ``w`` makes a real non-negative weight optimal over all
    complex weights.
    """
    states = [current, residual]
    g = np.array([[overlap(a, b) for b in states] for a in states])
    u = np.array([overlap(s, target) for s in states])
    try:
        v = np.linalg.solve(g, u)
    except np.linalg.LinAlgError:
        return 1.0 + 0j
    if abs(v[0]) < 1e-300 or abs(v[1]) < 1e-300:
        return 1.0 + 0j
    k = v[1] / v[0]
    return complex(k / abs(k))


def optimize_kappa(target: Mps, current: Mps, residual: Mps) -> float:
    """``kappa >= 0`` maximizing ``|<t|c + k r>|^2 / <c + k r|c + k r>``.

    Numerator and denominator are quadratics in ``k``; the stationary points
    solve a quadratic equation.  The maximum over those roots, ``k = 0`` and
    ``k -> infinity`` is returned, with the last case capped at ``KAPPA_CAP``.
    If the fidelity does not depend on ``k`` the value 1 is returned.
    """
    rr = overlap(residual, residual).real
    if rr < ZERO_RESIDUAL**2:
        raise ValueError("residual is numerically zero")
    a = overlap(target, current)
    b = overlap(target, residual)
    n0, n1, n2 = abs(a) ** 2, 2 * (a.conjugate() * b).real, abs(b) ** 2
    d0, d1, d2 = overlap(current, current).real, 2 * overlap(current, residual).real, rr

    def fid(k: float) -> float:
        den = d0 + d1 * k + d2 * k * k
        return (n0 + n1 * k + n2 * k * k) / den if den > 1e-300 else -math.inf

    c2, c1, c0 = n2 * d1 - n1 * d2, 2 * (n2 * d0 - n0 * d2), n1 * d0 - n0 * d1
    scale = max(abs(n0), abs(n1), abs(n2)) * max(abs(d0), abs(d1), abs(d2))
    if max(abs(c2), abs(c1), abs(c0)) <= 1e-14 * scale:
        return 1.0
    if abs(c2) > 1e-14 * scale:
        roots = np.roots([c2, c1, c0])
    elif abs(c1) > 1e-14 * scale:
        roots = np.array([-c0 / c1])
    else:
        roots = np.array([])
    candidates = [0.0] + [float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
    best = max(candidates, key=fid)
    if n2 / d2 > fid(best) + 1e-15:
        return KAPPA_CAP
    return float(min(best, KAPPA_CAP))


@dataclass
class LcuDecomposition:
    """Terms ``kappa_i U_i`` with ``kappa_0 = 1`` and their fidelity traces.

    ``fidelity_trace[i]`` is the fidelity of the truncated running state
    ``psi_i`` used by the greedy search.  ``exact_fidelity_trace[i]`` is the
    fidelity of the state the first ``i + 1`` terms actually prepare.
    """

    n_sites: int
    kappas: list[float]
    layers: list[SeqLayer]
    fidelity_trace: list[float]
    d_max: int | None
    exact_fidelity_trace: list[float] = field(default_factory=list)
    bond_trace: list[int] = field(default_factory=list)
    terminated_early: bool = False
    projected: bool = True
    stalled: bool = False
    phase: str = "optimal"

    @property
    def n_terms(self) -> int:
        return len(self.layers)

    def term_states(self) -> list[Mps]:
        zero = zero_state(self.n_sites)
        return [layer.apply(zero) for layer in self.layers]

    def prepared_state(self, k: int | None = None) -> Mps:
        """Normalized ``sum_{i<k} kappa_i U_i |0>`` without truncation."""
        k = self.n_terms if k is None else k
        return normalize(linear_combination(self.term_states()[:k], self.kappas[:k]))

    def truncated(self, k: int) -> LcuDecomposition:
        return LcuDecomposition(
            self.n_sites, self.kappas[:k], self.layers[:k], self.fidelity_trace[:k], self.d_max,
            self.exact_fidelity_trace[:k], self.bond_trace[:k], self.terminated_early, self.projected,
            self.stalled, self.phase,
        )

    def to_dict(self) -> dict:
        return {
            "kind": "lcu",
            "n_sites": self.n_sites,
            "kappas": list(self.kappas),
            "layers": [layer.to_dict() for layer in self.layers],
            "fidelity_trace": list(self.fidelity_trace),
            "exact_fidelity_trace": list(self.exact_fidelity_trace),
            "bond_trace": list(self.bond_trace),
            "d_max": self.d_max,
            "terminated_early": self.terminated_early,
            "projected": self.projected,
            "stalled": self.stalled,
            "phase": self.phase,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> LcuDecomposition:
        return cls(
            int(obj["n_sites"]),
            [float(k) for k in obj["kappas"]],
            [SeqLayer.from_dict(x) for x in obj["layers"]],
            [float(f) for f in obj["fidelity_trace"]],
            obj.get("d_max"),
            [float(f) for f in obj.get("exact_fidelity_trace", [])],
            [int(b) for b in obj.get("bond_trace", [])],
            bool(obj.get("terminated_early", False)),
            bool(obj.get("projected", True)),
            bool(obj.get("stalled", False)),
            str(obj.get("phase", "optimal")),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> LcuDecomposition:
        return cls.from_dict(json.loads(text))


def _fidelity(target: Mps, state: Mps) -> float:
    nn = overlap(state, state).real
    return float(abs(overlap(target, state)) ** 2 / nn) if nn > 0 else 0.0


def lcu_decompose(
    target: Mps,
    n_terms: int,
    d_max: int | None,
    *,
    projected: bool = True,
    policy: BasisPolicy = BasisPolicy(),
    phase: str = "optimal",
) -> LcuDecomposition:
    """Greedy LCU search with ``n_terms`` terms including ``U_0``.

    The search stops early when the residual vanishes (``terminated_early``)
    or when the best weight is zero (``stalled``): the running state is then
    unchanged and every further step would repeat the same one.

    ``d_max=None`` keeps the running state untruncated.  With
    ``projected=False`` the residual is ``psi - psi_{i-1}`` instead of the
    difference from the projection of ``psi`` on ``psi_{i-1}``.

    ``phase`` fixes the global phase of each truncated residual before its
    weight is optimized.  ``target`` makes ``<target|r>`` real and
    non-negative.  ``optimal`` (the default) then applies ``optimal_phase``,
    so the real non-negative weight is the best complex weight.  The
    truncated residual is not orthogonal to the running state, and under
    ``target`` the best non-negative weight can be zero although another
    phase would still improve the fidelity.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    if phase not in PHASE_RULES:
        raise ValueError(f"unknown phase rule {phase!r}")
    target = normalize(target)
    bound = 2**target.n_sites if d_max is None else d_max
    psi0 = _phase_align(compress(target, 2)[0], target)
    terms = [psi0]
    kappas = [1.0]
    layers = [layer_from_d2_mps(psi0, policy)]
    current = psi0
    fids = [_fidelity(target, current)]
    bonds = [current.max_bond]
    early = stalled = False
    for _ in range(1, n_terms):
        if projected:
            coeff = overlap(current, target) / overlap(current, current).real
        else:
            coeff = 1.0
        diff = add_scaled(target, -coeff, current)
        # the QR sweep resolves a cancelling difference far below sqrt(machine eps)
        if math.exp(canonicalize(diff, 0).norm_log) < ZERO_RESIDUAL:
            early = True
            break
        r = _phase_align(compress(diff, 2)[0], target)
        if phase == "optimal":
            r = r.scaled(optimal_phase(target, current, r))
        kappa = optimize_kappa(target, current, r)
        if kappa == 0.0:
            # the running state would not change, so every later step repeats this one
            stalled = True
            break
        current, _ = compress(add_scaled(current, kappa, r), bound, normalize_output=False)
        terms.append(r)
        kappas.append(kappa)
        layers.append(layer_from_d2_mps(r, policy))
        fids.append(_fidelity(target, current))
        bonds.append(current.max_bond)
    exact = _exact_fidelities(target, terms, kappas)
    return LcuDecomposition(target.n_sites, kappas, layers, fids, d_max, exact, bonds, early, projected,
                            stalled, phase)


def _gram(states: list[Mps]) -> np.ndarray:
    k = len(states)
    g = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(i, k):
            g[i, j] = overlap(states[i], states[j])
            g[j, i] = g[i, j].conjugate()
    return g


def _exact_fidelities(target: Mps, terms: list[Mps], kappas: list[float]) -> list[float]:
    g = _gram(terms)
    t = np.array([overlap(target, s) for s in terms])
    k = np.array(kappas)
    out = []
    for m in range(1, len(terms) + 1):
        num = abs(k[:m] @ t[:m]) ** 2
        den = (k[:m] @ g[:m, :m] @ k[:m]).real
        out.append(float(num / den))
    return out


def success_probability(d: LcuDecomposition) -> float:
    """All-zeros ancilla probability ``|sum kappa_i U_i|0>|^2 / (sum kappa_i)^2``."""
    k = np.array(d.kappas)
    g = _gram(d.term_states())
    return float(min(max((k @ g @ k).real / k.sum() ** 2, 0.0), 1.0))


def _gray(t: int) -> int:
    return t ^ (t >> 1)


def ancilla_amplitudes(kappas: list[float]) -> np.ndarray:
    """First column of ``B`` in register order (pattern ``gray(t)`` holds term ``t``)."""
    m = max(math.ceil(math.log2(len(kappas))), 0) if len(kappas) > 1 else 0
    amp = np.zeros(2**m)
    total = float(sum(kappas))
    for t, kappa in enumerate(kappas):
        amp[_gray(t)] = math.sqrt(kappa / total)
    return amp


def assemble_lcu_circuit(d: LcuDecomposition, *, isometric: bool = True) -> Circuit:
    """System, ``ceil(lg T)`` ancillas and ``ceil(lg T) - 1`` work qubits for ``T`` terms."""
    n, t_terms = d.n_sites, d.n_terms
    m = math.ceil(math.log2(t_terms)) if t_terms > 1 else 0
    n_work = max(m - 1, 0)
    if n + m + n_work > MAX_REGISTER:
        raise ValueError(f"{n + m + n_work} qubits exceed the register budget {MAX_REGISTER}")
    c = Circuit(n, m, n_work)
    if m == 0:
        return c.extend(d.layers[0].circuit(isometric).gates)
    anc = c.ancilla_qubits
    amp = ancilla_amplitudes(d.kappas).astype(complex)
    b = complete_unitary(amp.reshape(-1, 1), [0], 2**m, BasisPolicy())
    c.append(controlled(b, anc, isometric=True))
    for t, layer in enumerate(d.layers):
        pattern = _gray(t)
        values = [(pattern >> (m - 1 - k)) & 1 for k in range(m)]
        for g in layer.circuit(isometric).gates:
            c.append(controlled(g.matrix, g.qubits, anc, values, isometric=g.isometric))
    c.append(controlled(b.conj().T, anc, isometric=True))
    return c


def postselected_state(c: Circuit, state: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """System amplitudes with ancilla and work registers at zero, and their probability."""
    out = simulate(c, state)
    sys = out[: 1 << c.n_system]
    return sys, float(np.vdot(sys, sys).real)
