"""Gate-level circuits, a statevector simulator, Pauli gadgets and a CNOT cost model.

Qubit ``q`` is bit ``q`` of a statevector index (least significant first).  A
gate block acting on qubits ``(q_0, ..., q_{m-1})`` uses block index
``sum_k bit(q_k) * 2**(m-1-k)``, so the first listed qubit is the most
significant; for two qubits this is ``kron(u_q0, u_q1)``.

Register layout of a circuit: system qubits ``0 .. n_system-1``, then the
ancillas, then the work qubits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .mps import SizeGuardError, is_unitary
from .pauli import PauliString

MAX_SIM_QUBITS = 24
KINDS = ("one", "two", "cnot", "rz", "controlled")

H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
SDG = np.diag([1, -1j]).astype(complex)
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    Attributes:
        kind: ``one``, ``two``, ``cnot``, ``rz`` or ``controlled``.
        qubits: Target qubits.  For ``cnot`` this is ``(control, target)``.
        matrix: Block unitary for ``one``, ``two`` and ``controlled``.
        angle: Rotation angle for ``rz``.
        controls: Control qubits of a ``controlled`` gate, most significant first.
        control_values: Required value per control (0 gives an open control).
        isometric: Only the block's action on ``|0...0>`` of its targets
            matters, which the cost model prices with the cheaper synthesis.
        param: Optional variational parameter index carried by an ``rz``.
    """

    kind: str
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = None
    angle: float = 0.0
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    isometric: bool = False
    param: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        vals = tuple(int(v) for v in self.control_values) or (1,) * len(self.controls)
        object.__setattr__(self, "control_values", vals)
        arity = {"one": 1, "two": 2, "cnot": 2, "rz": 1}.get(self.kind)
        if arity is not None and len(self.qubits) != arity:
            raise ValueError(f"{self.kind} gate needs {arity} qubit(s)")
        if len(set(self.all_qubits)) != len(self.all_qubits):
            raise ValueError("gate qubits must be distinct")
        if len(vals) != len(self.controls) or any(v not in (0, 1) for v in vals):
            raise ValueError("control_values must be 0/1, one per control")
        if self.kind in ("one", "two", "controlled"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} gate needs a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2 ** len(self.qubits),) * 2:
                raise ValueError("matrix shape does not match the target qubits")
            if not is_unitary(m):
                raise ValueError("gate matrix is not unitary within 1e-10")
            object.__setattr__(self, "matrix", m)

    @property
    def all_qubits(self) -> tuple[int, ...]:
        return self.controls + self.qubits

    def unitary(self) -> np.ndarray:
        """Block matrix on ``qubits`` (controls excluded)."""
        if self.kind == "cnot":
            return CNOT_MATRIX
        if self.kind == "rz":
            return rz_matrix(self.angle)
        return self.matrix

    def inverse(self) -> Gate:
        if self.kind == "cnot":
            return self
        if self.kind == "rz":
            return replace(self, angle=-self.angle)
        return replace(self, matrix=self.matrix.conj().T)


def one_qubit(u: np.ndarray, q: int) -> Gate:
    return Gate("one", (q,), u)


def two_qubit(u: np.ndarray, q0: int, q1: int, *, isometric: bool = False) -> Gate:
    return Gate("two", (q0, q1), u, isometric=isometric)


def cnot(control: int, target: int) -> Gate:
    return Gate("cnot", (control, target))


def rz(theta: float, q: int, param: int | None = None) -> Gate:
    return Gate("rz", (q,), angle=float(theta), param=param)


def controlled(
    u: np.ndarray,
    targets: Sequence[int],
    controls: Sequence[int] = (),
    values: Sequence[int] = (),
    *,
    isometric: bool = False,
) -> Gate:
    return Gate("controlled", tuple(targets), u, controls=tuple(controls),
                control_values=tuple(values), isometric=isometric)


@dataclass
class Circuit:
    n_system: int
    n_ancilla: int = 0
    n_work: int = 0
    gates: list[Gate] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.n_ancilla + self.n_work

    @property
    def ancilla_qubits(self) -> list[int]:
        return list(range(self.n_system, self.n_system + self.n_ancilla))

    @property
    def work_qubits(self) -> list[int]:
        start = self.n_system + self.n_ancilla
        return list(range(start, start + self.n_work))

    def append(self, gate: Gate) -> Circuit:
        if any(not 0 <= q < self.n_qubits for q in gate.all_qubits):
            raise IndexError(f"gate qubits {gate.all_qubits} out of range 0..{self.n_qubits - 1}")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        for g in gates:
            self.append(g)
        return self

    def compose(self, other: Circuit) -> Circuit:
        """New circuit running ``self`` then ``other`` (registers must agree)."""
        if (self.n_system, self.n_ancilla, self.n_work) != (other.n_system, other.n_ancilla, other.n_work):
            raise ValueError("register layouts differ")
        return Circuit(self.n_system, self.n_ancilla, self.n_work, self.gates + other.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.n_system, self.n_ancilla, self.n_work,
                       [g.inverse() for g in reversed(self.gates)])

    def __len__(self) -> int:
        return len(self.gates)


# ---------------------------------------------------------------- simulation


def _apply_block(psi: np.ndarray, n: int, g: Gate) -> np.ndarray:
    u = g.unitary()
    m = len(g.qubits)
    if g.controls:
        idx = [slice(None)] * n
        for c, v in zip(g.controls, g.control_values):
            idx[n - 1 - c] = v
        idx = tuple(idx)
        sub = psi[idx]
        removed = sorted(n - 1 - c for c in g.controls)
        axes = []
        for q in g.qubits:
            ax = n - 1 - q
            axes.append(ax - sum(1 for r in removed if r < ax))
        out = psi.copy()
        out[idx] = _contract(sub, u, axes, m)
        return out
    return _contract(psi, u, [n - 1 - q for q in g.qubits], m)


def _contract(psi: np.ndarray, u: np.ndarray, axes: list[int], m: int) -> np.ndarray:
    t = u.reshape((2,) * (2 * m))
    out = np.tensordot(t, psi, axes=(list(range(m, 2 * m)), axes))
    return np.moveaxis(out, list(range(m)), axes)


def simulate(c: Circuit, state: np.ndarray | None = None) -> np.ndarray:
    """Exact statevector after running ``c`` on ``state`` (default ``|0...0>``)."""
    n = c.n_qubits
    if n > MAX_SIM_QUBITS:
        raise SizeGuardError(f"{n} qubits exceeds the simulator limit {MAX_SIM_QUBITS}")
    if state is None:
        vec = np.zeros(1 << n, dtype=complex)
        vec[0] = 1.0
    else:
        vec = np.asarray(state, dtype=complex).ravel()
        if vec.size != 1 << n:
            raise ValueError(f"input has dimension {vec.size}, circuit needs {1 << n}")
    psi = vec.reshape((2,) * n) if n else vec.reshape(())
    for g in c.gates:
        if any(not 0 <= q < n for q in g.all_qubits):
            raise IndexError(f"gate qubits {g.all_qubits} out of range")
        psi = _apply_block(psi, n, g)
    return psi.reshape(-1)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a small circuit, column ``k`` is the image of basis state ``k``."""
    if c.n_qubits > 12:
        raise SizeGuardError("dense circuit unitary limited to 12 qubits")
    dim = 1 << c.n_qubits
    return np.column_stack([simulate(c, e) for e in np.eye(dim, dtype=complex)])


# ---------------------------------------------------------------- constructions


def pauli_gadget(p: PauliString, theta: float, n: int | None = None, param: int | None = None) -> Circuit:
    """Circuit for ``exp(-i theta/2 P)`` with ``2(w-1)`` CNOTs for weight ``w``.

    The coefficient of ``p`` is ignored; only its letters matter.
    """
    support = p.support
    if not support:
        raise ValueError("identity string only contributes a global phase")
    n = len(p.letters) if n is None else n
    basis = []
    for q in support:
        ch = p.letters[q]
        if ch == "X":
            basis.append(one_qubit(H, q))
        elif ch == "Y":
            basis.append(one_qubit(H @ SDG, q))
    ladder = [cnot(a, b) for a, b in zip(support[:-1], support[1:])]
    c = Circuit(n)
    c.extend(basis).extend(ladder)
    c.append(rz(theta, support[-1], param))
    c.extend(reversed(ladder)).extend(g.inverse() for g in reversed(basis))
    return c


def _fixes_zero(u: np.ndarray, tol: float = 1e-12) -> bool:
    return abs(abs(u[0, 0]) - 1.0) < tol


def synthesize_two_qubit_state_prep(u: np.ndarray, tol: float = 1e-12) -> Circuit:
    """Circuit preparing ``u|00>`` up to global phase, from its Schmidt form.

    ``u|00> = s0 |a0 b0> + s1 |a1 b1>`` is built by a rotation putting
    ``(s0, s1)`` on qubit 0, one CNOT, then local unitaries with columns
    ``a_k`` and ``b_k``.  Entangled columns take 1 CNOT and 3 one-qubit gates.
    Product columns need no CNOT.  One-qubit gates that fix ``|0>`` up to a
    phase are dropped.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4) or not is_unitary(u):
        raise ValueError("expected a 4x4 unitary")
    a, s, vh = np.linalg.svd(u[:, 0].reshape(2, 2))
    b = vh.T
    c = Circuit(2)
    if s[1] > tol:
        c.append(one_qubit(np.array([[s[0], -s[1]], [s[1], s[0]]], dtype=complex), 0))
        c.append(cnot(0, 1))
        c.append(one_qubit(a, 0)).append(one_qubit(b, 1))
        return c
    if not _fixes_zero(a):
        c.append(one_qubit(a, 0))
    if not _fixes_zero(b):
        c.append(one_qubit(b, 1))
    return c


# ---------------------------------------------------------------- cost model

# (cnot, one-qubit) of each expansion; see ``cost_report``
COST_TWO_GENERIC = (3, 8)
COST_TWO_ISOMETRIC = (2, 6)
COST_CONTROLLED_ONE = (2, 4)
COST_TOFFOLI = (6, 9)


@dataclass(frozen=True)
class CostReport:
    cnot_count: int
    one_qubit_count: int
    total_gate_count: int
    depth: int
    parameter_count: int

    def to_dict(self) -> dict:
        return {
            "cnot_count": self.cnot_count,
            "one_qubit_count": self.one_qubit_count,
            "total_gate_count": self.total_gate_count,
            "depth": self.depth,
            "parameter_count": self.parameter_count,
        }


def _block_cost(u: np.ndarray, n_targets: int, isometric: bool) -> tuple[int, int]:
    if n_targets == 1:
        return 0, 1
    if n_targets == 2:
        return COST_TWO_ISOMETRIC if isometric else COST_TWO_GENERIC
    # multi-qubit state-preparation block: k amplitudes at k * log k CNOTs
    col = max(np.count_nonzero(np.abs(u[:, 0]) > 1e-12), np.count_nonzero(np.abs(u[0, :]) > 1e-12))
    k = int(col)
    cx = 0 if k <= 1 else k * max(math.ceil(math.log2(k)), 1)
    return cx, k + cx


def _singly_controlled_cost(u: np.ndarray, n_targets: int, isometric: bool) -> tuple[int, int]:
    """Replace each CNOT by a Toffoli and each one-qubit gate by its controlled form."""
    cx, oq = _block_cost(u, n_targets, isometric)
    return (cx * COST_TOFFOLI[0] + oq * COST_CONTROLLED_ONE[0],
            cx * COST_TOFFOLI[1] + oq * COST_CONTROLLED_ONE[1])


def _toffolis(chain_len: int) -> int:
    return max(chain_len - 1, 0)


def cost_report(c: Circuit, expand_controls: bool = True) -> CostReport:
    """Counts after expanding every gate into CNOTs and one-qubit gates.

    Expansion rules:
      * ``two``: 3 CNOT + 8 one-qubit, or 2 CNOT + 6 one-qubit when isometric.
      * ``controlled`` with no controls: the block cost above; blocks on
        three or more qubits are state preparations of ``k`` amplitudes
        priced at ``k ceil(log2 k)`` CNOTs.
      * one control: every CNOT of the block becomes a Toffoli
        (6 CNOT + 9 one-qubit) and every one-qubit gate a controlled one
        (2 CNOT + 4 one-qubit).
      * ``k >= 2`` controls: a cascade of ``k-1`` Toffolis ANDs the controls
        into the work register and the block is singly controlled on the last
        work qubit.  The cascade is left computed while consecutive gates
        share its leading controls, so gray-ordered patterns only recompute
        the changed suffix.  Open controls are X-flipped lazily.

    Depth is a greedy as-soon-as-possible layering in which each instruction
    occupies its qubits (plus the work register when it uses the cascade) for
    the depth of its expansion.  A two-qubit block lasts 7 steps, or 5 when
    isometric (CNOT layers interleaved with one-qubit layers); every other
    expansion is serialized at its primitive gate count.  With ``expand_controls=False``
    each controlled gate counts as one opaque gate of depth one.
    """
    cx = oq = opaque = 0
    busy = [0] * c.n_qubits
    params: set[int] = set()
    chain: list[tuple[int, int]] = []  # (control qubit, value) currently ANDed into work qubits
    flipped: set[int] = set()

    def occupy(qubits: Iterable[int], steps: int) -> None:
        qubits = list(qubits)
        if not qubits or steps <= 0:
            return
        start = max(busy[q] for q in qubits)
        for q in qubits:
            busy[q] = start + steps

    def flush() -> None:
        nonlocal cx, oq
        if not chain and not flipped:
            return
        t = _toffolis(len(chain))
        qubits = [q for q, _ in chain] + c.work_qubits[: t] + sorted(flipped)
        cx += t * COST_TOFFOLI[0]
        oq += t * COST_TOFFOLI[1] + len(flipped)
        occupy(qubits, t * sum(COST_TOFFOLI) + (1 if flipped else 0))
        chain.clear()
        flipped.clear()

    for g in c.gates:
        if g.param is not None:
            params.add(g.param)
        if g.kind != "controlled" or not g.controls or not expand_controls:
            touched = set(g.all_qubits)
            if chain and touched & ({q for q, _ in chain} | set(c.work_qubits) | flipped):
                flush()
            elif flipped and touched & flipped:
                flush()
        if g.kind in ("one", "rz"):
            oq += 1
            occupy(g.qubits, 1)
        elif g.kind == "cnot":
            cx += 1
            occupy(g.qubits, 1)
        elif g.kind == "two":
            a, b = COST_TWO_ISOMETRIC if g.isometric else COST_TWO_GENERIC
            cx += a
            oq += b
            occupy(g.qubits, 5 if g.isometric else 7)
        elif not expand_controls:
            opaque += 1
            occupy(g.all_qubits, 1)
        elif not g.controls:
            a, b = _block_cost(g.matrix, len(g.qubits), g.isometric)
            cx += a
            oq += b
            occupy(g.qubits, a + b)
        else:
            pattern = list(zip(g.controls, g.control_values))
            if len(pattern) == 1:
                flush()
            keep = 0
            while keep < min(len(chain), len(pattern)) and chain[keep] == pattern[keep]:
                keep += 1
            # a one-Toffoli prefix has no use without its partner, so recompute from scratch
            keep = keep if keep >= 2 else 0
            t_undo = _toffolis(len(chain)) - _toffolis(keep)
            flips = 0
            for q, v in pattern[keep:]:
                if (q in flipped) != (v == 0):
                    flipped.symmetric_difference_update({q})
                    flips += 1
            t_do = _toffolis(len(pattern)) - _toffolis(keep)
            if len(pattern) > len(c.work_qubits) + 1:
                raise ValueError(f"{len(pattern)} controls need {len(pattern) - 1} work qubits")
            a, b = _singly_controlled_cost(g.matrix, len(g.qubits), g.isometric)
            n_tof = t_undo + t_do
            cx += n_tof * COST_TOFFOLI[0] + a
            oq += n_tof * COST_TOFFOLI[1] + flips + b
            work = c.work_qubits[: _toffolis(len(pattern))]
            occupy(list(g.controls) + work, n_tof * sum(COST_TOFFOLI) + (1 if flips else 0))
            occupy(list(g.qubits) + (work[-1:] if work else [g.controls[0]]), a + b)
            chain[:] = pattern if len(pattern) >= 2 else []
    flush()
    total = cx + oq + opaque
    return CostReport(cx, oq, total, max(busy, default=0), len(params))


# ---------------------------------------------------------------- serialization


def _matrix_to_json(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def _matrix_from_json(data: list, m: int) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in data], dtype=complex)
    return arr.reshape(2**m, 2**m)


def gate_to_dict(g: Gate) -> dict:
    out: dict = {"kind": g.kind, "qubits": list(g.qubits)}
    if g.matrix is not None:
        out["matrix"] = _matrix_to_json(g.matrix)
    if g.kind == "rz":
        out["angle"] = g.angle
    if g.controls:
        out["controls"] = list(g.controls)
        out["control_values"] = list(g.control_values)
    if g.isometric:
        out["isometric"] = True
    if g.param is not None:
        out["param"] = g.param
    return out


def gate_from_dict(obj: dict) -> Gate:
    qubits = tuple(obj["qubits"])
    matrix = _matrix_from_json(obj["matrix"], len(qubits)) if "matrix" in obj else None
    return Gate(
        obj["kind"], qubits, matrix,
        angle=float(obj.get("angle", 0.0)),
        controls=tuple(obj.get("controls", ())),
        control_values=tuple(obj.get("control_values", ())),
        isometric=bool(obj.get("isometric", False)),
        param=obj.get("param"),
    )


def circuit_to_dict(c: Circuit) -> dict:
    return {
        "n_system": c.n_system,
        "n_ancilla": c.n_ancilla,
        "n_work": c.n_work,
        "gates": [gate_to_dict(g) for g in c.gates],
    }


def circuit_from_dict(obj: dict) -> Circuit:
    c = Circuit(int(obj["n_system"]), int(obj.get("n_ancilla", 0)), int(obj.get("n_work", 0)))
    return c.extend(gate_from_dict(g) for g in obj["gates"])


def dumps(c: Circuit) -> str:
    return json.dumps(circuit_to_dict(c))


def loads(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))


def to_text(c: Circuit) -> str:
    """One gate per line: ``kind`` then fields.

    Lines look like ``cnot 0 1``, ``rz 3 0.7``, ``one 2 : re im re im ...`` and
    ``controlled 4 5 | c 8 9 v 1 0 | iso : re im ...`` with matrices row-major.
    """
    lines = [f"# qubits system={c.n_system} ancilla={c.n_ancilla} work={c.n_work}"]
    for g in c.gates:
        parts = [g.kind, *map(str, g.qubits)]
        if g.kind == "rz":
            parts.append(repr(g.angle))
        if g.controls:
            parts += ["| c", *map(str, g.controls), "v", *map(str, g.control_values)]
        if g.isometric:
            parts.append("| iso")
        if g.matrix is not None:
            parts.append(":")
            parts += [f"{z.real:.17g} {z.imag:.17g}" for z in g.matrix.ravel()]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
