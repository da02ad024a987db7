"""Sequential (layered) preparation of an MPS by two-qubit unitaries.

A bond-dimension-2 MPS in right-canonical form is generated exactly by a
staircase of ``n - 1`` two-qubit unitaries ``G[0], ..., G[n-2]`` with
``G[j]`` on qubits ``(j, j + 1)``, applied in that order to ``|0...0>``.
Before ``G[j]`` acts, qubit ``j`` carries the virtual bond index ``l`` and
qubit ``j + 1`` is still ``|0>``, so only the columns ``2 l`` of ``G[j]`` are
fixed (by the site tensor).  The remaining columns are any orthonormal
completion.  Longer targets are approached by peeling off one such layer at
a time: compress the target to bond dimension 2, build its layer ``U``, apply
``U^dagger`` to the target, truncate and repeat.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import unitary_group

from .circuits import Circuit, one_qubit, simulate, two_qubit
from .mps import (
    Mps,
    apply_one_site_gate,
    apply_two_site_gate,
    canonicalize,
    compress,
    normalize,
    to_statevector,
    zero_state,
    _complex_array_from_json,
    _complex_array_to_json,
)

MAX_DENSE_EVAL_SITES = 20


@dataclass(frozen=True)
class BasisPolicy:
    """How the free columns of each layer unitary are filled.

    ``qr`` completes the fixed columns deterministically from a full pivoted
    QR; ``random`` rotates that completion by a seeded Haar-random unitary.
    """

    kind: str = "qr"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("qr", "random"):
            raise ValueError(f"unknown basis policy {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed}

    @classmethod
    def from_dict(cls, obj: dict) -> BasisPolicy:
        return cls(obj.get("kind", "qr"), obj.get("seed"))


def complete_unitary(
    fixed: np.ndarray, positions: Sequence[int], dim: int, policy: BasisPolicy, rng=None
) -> np.ndarray:
    """Unitary whose columns ``positions`` equal the orthonormal ``fixed`` columns."""
    fixed = np.asarray(fixed, dtype=complex).reshape(dim, -1)
    k = fixed.shape[1]
    q, _, _ = sla.qr(fixed, mode="full", pivoting=True)
    null = q[:, k:]
    if policy.kind == "random" and dim - k > 1:
        null = null @ unitary_group.rvs(dim - k, random_state=rng)
    elif policy.kind == "random" and dim - k == 1:
        null = null * np.exp(2j * np.pi * rng.random())
    u = np.empty((dim, dim), dtype=complex)
    free = [c for c in range(dim) if c not in positions]
    u[:, list(positions)] = fixed
    u[:, free] = null
    return u


@dataclass
class SeqLayer:
    """Blocks ``G[j]`` on qubits ``(j, j + 1)``; a single 2x2 block when ``n_sites == 1``."""

    n_sites: int
    blocks: list[np.ndarray]

    def __post_init__(self):
        expect = 1 if self.n_sites == 1 else self.n_sites - 1
        if len(self.blocks) != expect:
            raise ValueError(f"{self.n_sites}-site layer needs {expect} blocks")

    def circuit(self, isometric: bool = True) -> Circuit:
        c = Circuit(self.n_sites)
        if self.n_sites == 1:
            return c.append(one_qubit(self.blocks[0], 0))
        for j, g in enumerate(self.blocks):
            c.append(two_qubit(g, j, j + 1, isometric=isometric))
        return c

    def apply(self, state: Mps, *, dagger: bool = False, d_max: int | None = None) -> Mps:
        """``U psi`` or ``U^dagger psi`` on an MPS (no truncation unless ``d_max``)."""
        if self.n_sites == 1:
            g = self.blocks[0].conj().T if dagger else self.blocks[0]
            return apply_one_site_gate(state, g, 0)
        if dagger:
            out = canonicalize(state, self.n_sites - 1)
            for j in range(self.n_sites - 2, -1, -1):
                out = apply_two_site_gate(out, self.blocks[j].conj().T, j, d_max, center="left")
            return out
        out = canonicalize(state, 0)
        for j, g in enumerate(self.blocks):
            out = apply_two_site_gate(out, g, j, d_max, center="right")
        return out

    def apply_dense(self, vec: np.ndarray, *, dagger: bool = False) -> np.ndarray:
        c = self.circuit()
        return simulate(c.inverse() if dagger else c, vec)

    def to_dict(self) -> dict:
        return {"n_sites": self.n_sites, "blocks": [_complex_array_to_json(g) for g in self.blocks]}

    @classmethod
    def from_dict(cls, obj: dict) -> SeqLayer:
        return cls(int(obj["n_sites"]), [_complex_array_from_json(g) for g in obj["blocks"]])


def layer_from_d2_mps(state: Mps, policy: BasisPolicy = BasisPolicy()) -> SeqLayer:
    """Exact layer ``U`` with ``U|0...0> = state / |state|`` for bond dimension <= 2."""
    if state.max_bond > 2:
        raise ValueError(f"layer extraction needs bond dimension <= 2, got {state.max_bond}")
    n = state.n_sites
    rng = np.random.default_rng(policy.seed)
    ts = canonicalize(state, 0).tensors
    if n == 1:
        col = ts[0][0, :, 0].reshape(2, 1)
        return SeqLayer(1, [complete_unitary(col, [0], 2, policy, rng)])
    blocks = []
    for j in range(n - 1):
        t = ts[j] if j < n - 2 else np.tensordot(ts[j], ts[j + 1], axes=([2], [0]))[..., 0]
        dl, _, dr = t.shape
        padded = np.zeros((dl, 2, 2), dtype=complex)
        padded[:, :, :dr] = t
        fixed = padded.reshape(dl, 4).T  # column l is the output (p, r) for input |l>|0>
        blocks.append(complete_unitary(fixed, [2 * l for l in range(dl)], 4, policy, rng))
    return SeqLayer(n, blocks)


def disentangle_step(
    target: Mps, d_max: int, policy: BasisPolicy = BasisPolicy()
) -> tuple[SeqLayer, Mps]:
    """One layer from the D=2 truncation of ``target`` and the truncated residual ``U^dagger target``."""
    d2, _ = compress(target, 2)
    layer = layer_from_d2_mps(d2, policy)
    residual, _ = compress(layer.apply(normalize(target), dagger=True), d_max)
    return layer, residual


@dataclass
class SeqPlan:
    """Layers in extraction order; the prepared state is ``U_0 U_1 ... U_{k-1} |0...0>``.

    The circuit therefore applies ``layers[k-1]`` first.  ``fidelity_trace[k-1]``
    is the fidelity of the ``k``-layer state with the target.
    """

    n_sites: int
    layers: list[SeqLayer]
    fidelity_trace: list[float]
    d_max: int
    basis_policy: BasisPolicy = field(default_factory=BasisPolicy)
    residual_zero_overlap: list[float] = field(default_factory=list)

    def truncated(self, k: int) -> SeqPlan:
        return SeqPlan(self.n_sites, self.layers[:k], self.fidelity_trace[:k], self.d_max,
                       self.basis_policy, self.residual_zero_overlap[:k])

    def to_dict(self) -> dict:
        return {
            "kind": "seq",
            "n_sites": self.n_sites,
            "d_max": self.d_max,
            "basis_policy": self.basis_policy.to_dict(),
            "fidelity_trace": list(self.fidelity_trace),
            "residual_zero_overlap": list(self.residual_zero_overlap),
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> SeqPlan:
        return cls(
            int(obj["n_sites"]),
            [SeqLayer.from_dict(x) for x in obj["layers"]],
            [float(f) for f in obj["fidelity_trace"]],
            int(obj["d_max"]),
            BasisPolicy.from_dict(obj.get("basis_policy", {})),
            [float(f) for f in obj.get("residual_zero_overlap", [])],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> SeqPlan:
        return cls.from_dict(json.loads(text))


def seq_prepare(
    target: Mps,
    max_layers: int,
    d_max: int,
    policy: BasisPolicy = BasisPolicy(),
    *,
    eval_d_max: int | None = None,
) -> SeqPlan:
    """Iterate ``disentangle_step`` for ``max_layers`` layers and record fidelities.

    The fidelity after ``k`` layers is ``|<0...0| U_{k-1}^dag ... U_0^dag |target>|^2``
    with every layer applied exactly.  Up to ``MAX_DENSE_EVAL_SITES`` sites
    this runs on the dense vector, which equals untruncated MPS arithmetic.
    Beyond that, layers are applied to an MPS truncated at ``eval_d_max``
    (default ``4 * d_max``).
    """
    if max_layers < 1:
        raise ValueError("max_layers must be at least 1")
    target = normalize(target)
    n = target.n_sites
    dense = n <= MAX_DENSE_EVAL_SITES
    probe = to_statevector(target) if dense else target
    layers, fids, res0 = [], [], []
    current = target
    for _ in range(max_layers):
        layer, current = disentangle_step(current, d_max, policy)
        layers.append(layer)
        if dense:
            probe = layer.apply_dense(probe, dagger=True)
            fids.append(float(abs(probe[0]) ** 2))
        else:
            probe, _ = compress(layer.apply(probe, dagger=True), eval_d_max or 4 * d_max,
                                normalize_output=False)
            fids.append(float(abs(_zero_amplitude(probe)) ** 2))
        res0.append(float(abs(_zero_amplitude(current)) ** 2))
    return SeqPlan(n, layers, fids, d_max, policy, res0)


def _zero_amplitude(state: Mps) -> complex:
    """``<0...0|state>`` including the log-scale."""
    v = np.ones(1, dtype=complex)
    for a in state.tensors:
        v = v @ a[:, 0, :]
    return complex(v[0] * math.exp(state.norm_log))


def prepared_state(plan: SeqPlan, k: int | None = None, d_max: int | None = None) -> Mps:
    """``U_0 ... U_{k-1}|0...0>`` as an MPS, exactly unless ``d_max`` is given."""
    k = len(plan.layers) if k is None else k
    out = zero_state(plan.n_sites)
    for layer in reversed(plan.layers[:k]):
        out = layer.apply(out, d_max=d_max)
    return out


def assemble_seq_circuit(plan: SeqPlan, k: int | None = None, isometric: bool = True) -> Circuit:
    k = len(plan.layers) if k is None else k
    c = Circuit(plan.n_sites)
    for layer in reversed(plan.layers[:k]):
        c.extend(layer.circuit(isometric).gates)
    return c
