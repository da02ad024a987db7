"""Excitation pools for canonical-transformation and generalized UCC ansatzes.

Spatial orbitals are ordered core, then active, then virtual, and every
excitation moves electrons "upward" (to higher spatial index).  The pool
convention:

* singles ``i -> a`` with ``i < a``, for each spin;
* same-spin doubles on four distinct spatial orbitals ``w < x < y < z``,
  taking the two pairings ``{w,x} -> {y,z}`` and ``{w,y} -> {x,z}`` per spin;
* mixed-spin doubles ``(i up, j down) -> (a up, b down)`` with ``i < a`` and
  ``j < b``.

This enumeration gives the generalized counts ``2 C(m,2)`` singles and
``(2/3) C(m,2) C(m-2,2) + C(m,2)^2`` doubles on ``m`` orbitals.  The
canonical-transformation pool keeps only generators that touch the core or
virtual space.  Singles must be ``c->a``, ``a->v`` or ``c->v``.  Doubles must
map an annihilation class pair to a creation class pair from ``QCT_DOUBLE_CLASSES``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations, product
from math import comb

import numpy as np

from .circuits import Circuit, pauli_gadget
from .fermion import FermionOperator, jordan_wigner, spin_orbital
from .pauli import PauliSum, PauliString, _string_diag

QCT_SINGLE_CLASSES = frozenset({("c", "a"), ("a", "v"), ("c", "v")})
QCT_DOUBLE_CLASSES = frozenset(
    {
        ("cc", "aa"), ("ac", "aa"), ("aa", "vv"), ("aa", "av"),
        ("ac", "av"), ("ac", "vv"), ("cc", "av"), ("cc", "vv"),
    }
)
_CLASS_ORDER = {"c": 0, "a": 1, "v": 2}


def _pair_tag(a: str, b: str) -> str:
    return "".join(sorted((a, b)))


@dataclass(frozen=True)
class OrbitalSplit:
    n_core: int
    n_active: int
    n_virtual: int
    n_electrons_active: int | None = None

    def __post_init__(self):
        if min(self.n_core, self.n_active, self.n_virtual) < 0:
            raise ValueError("orbital counts must be non-negative")
        if self.n_electrons_active is not None and not 0 <= self.n_electrons_active <= 2 * self.n_active:
            raise ValueError("active electron count does not fit the active space")

    @property
    def n_orbitals(self) -> int:
        return self.n_core + self.n_active + self.n_virtual

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orbitals

    def space(self, p: int) -> str:
        if p < self.n_core:
            return "c"
        if p < self.n_core + self.n_active:
            return "a"
        return "v"

    def qubits(self, space: str) -> list[int]:
        lo = {"c": 0, "a": self.n_core, "v": self.n_core + self.n_active}[space]
        size = {"c": self.n_core, "a": self.n_active, "v": self.n_virtual}[space]
        return list(range(2 * lo, 2 * (lo + size)))

    @classmethod
    def for_electrons(cls, n_core: int, n_active: int, n_virtual: int, n_electrons: int) -> OrbitalSplit:
        return cls(n_core, n_active, n_virtual, n_electrons - 2 * n_core)


@dataclass(frozen=True)
class Excitation:
    """``t = a^dag_{to...} a_{from...}`` with generator ``tau = t - t^dag``.

    Attributes:
        kind: ``single`` or ``double``.
        to: Creation spin orbitals (sorted).
        frm: Annihilation spin orbitals (sorted).
        tag: Class label such as ``c->a`` or ``ac->vv``.
        slot: Parameter index within its pool.
    """

    kind: str
    to: tuple[int, ...]
    frm: tuple[int, ...]
    tag: str
    slot: int = -1

    def generator(self) -> FermionOperator:
        t = FermionOperator.excitation(self.to, self.frm)
        return t - t.dagger()

    def qubit_generator(self, n_qubits: int) -> PauliSum:
        return jordan_wigner(self.generator(), n_qubits)

    def label(self) -> tuple[int, ...]:
        return self.to + self.frm

    def to_dict(self) -> dict:
        return {"kind": self.kind, "to": list(self.to), "from": list(self.frm), "tag": self.tag, "slot": self.slot}

    @classmethod
    def from_dict(cls, obj: dict) -> Excitation:
        return cls(obj["kind"], tuple(obj["to"]), tuple(obj["from"]), obj["tag"], int(obj.get("slot", -1)))


@dataclass
class ExcitationPool:
    excitations: list[Excitation]
    n_qubits: int
    ordering: str = "doubles-first, lexical (to, from) spin-orbital label"

    def __len__(self) -> int:
        return len(self.excitations)

    def __iter__(self):
        return iter(self.excitations)

    def counts(self) -> dict[str, int]:
        singles = sum(1 for e in self.excitations if e.kind == "single")
        return {"singles": singles, "doubles": len(self) - singles, "total": len(self)}

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "ordering": self.ordering,
            "excitations": [e.to_dict() for e in self.excitations],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> ExcitationPool:
        exc = [Excitation.from_dict(e) for e in obj["excitations"]]
        return cls(exc, int(obj["n_qubits"]), obj.get("ordering", cls.ordering))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> ExcitationPool:
        return cls.from_dict(json.loads(text))


def _enumerate(m: int, space, include_doubles: bool, keep_single, keep_double) -> list[Excitation]:
    doubles, singles = [], []
    if include_doubles:
        for w, x, y, z in combinations(range(m), 4):
            for frm, to in (((w, x), (y, z)), ((w, y), (x, z))):
                tag = (_pair_tag(space(frm[0]), space(frm[1])), _pair_tag(space(to[0]), space(to[1])))
                if not keep_double(tag):
                    continue
                for s in (0, 1):
                    doubles.append(Excitation(
                        "double",
                        tuple(spin_orbital(p, s) for p in to),
                        tuple(spin_orbital(p, s) for p in frm),
                        f"{tag[0]}->{tag[1]}",
                    ))
        pairs = list(combinations(range(m), 2))
        for (i, a), (j, b) in product(pairs, repeat=2):
            tag = (_pair_tag(space(i), space(j)), _pair_tag(space(a), space(b)))
            if not keep_double(tag):
                continue
            doubles.append(Excitation(
                "double",
                tuple(sorted((spin_orbital(a, 0), spin_orbital(b, 1)))),
                tuple(sorted((spin_orbital(i, 0), spin_orbital(j, 1)))),
                f"{tag[0]}->{tag[1]}",
            ))
    for i, a in combinations(range(m), 2):
        tag = (space(i), space(a))
        if not keep_single(tag):
            continue
        for s in (0, 1):
            singles.append(Excitation("single", (spin_orbital(a, s),), (spin_orbital(i, s),), f"{tag[0]}->{tag[1]}"))
    doubles.sort(key=Excitation.label)
    singles.sort(key=Excitation.label)
    return [Excitation(e.kind, e.to, e.frm, e.tag, k) for k, e in enumerate(doubles + singles)]


def build_gucc_pool(m: int, include_doubles: bool = True) -> ExcitationPool:
    """Generalized pool over ``m`` spatial orbitals (tags use the active label)."""
    exc = _enumerate(m, lambda p: "a", include_doubles, lambda t: True, lambda t: True)
    return ExcitationPool(exc, 2 * m)


def build_qct_pool(split: OrbitalSplit, include_doubles: bool = True) -> ExcitationPool:
    """Generators that leave no index purely in the active space.

    With an empty active space the whole orbital set is treated by the
    quantum circuit and the generalized pool on all orbitals is returned.
    """
    m = split.n_orbitals
    if split.n_active == 0:
        pool = build_gucc_pool(m, include_doubles)
        pool.ordering += "; empty active space gives the generalized pool"
        return pool
    exc = _enumerate(
        m, split.space, include_doubles,
        lambda t: t in QCT_SINGLE_CLASSES,
        lambda t: t in QCT_DOUBLE_CLASSES,
    )
    return ExcitationPool(exc, split.n_qubits)


def count_guccsd_parameters(m: int) -> tuple[int, int]:
    """``(singles, doubles)`` of the generalized pool on ``m`` spatial orbitals."""
    if m < 2:
        raise ValueError("need at least two spatial orbitals")
    pairs = comb(m, 2)
    doubles = (2 * pairs * comb(m - 2, 2)) // 3 + pairs**2
    return 2 * pairs, doubles


def count_qct_parameters(split: OrbitalSplit, include_doubles: bool = True) -> tuple[int, int]:
    """Closed-form ``(singles, doubles)`` of ``build_qct_pool`` by class pattern.

    Counts are sums over the spaces the sorted orbital indices fall in, so
    they cost nothing for large splits and give an independent check of the
    enumeration.
    """
    if split.n_active == 0:
        if split.n_orbitals < 2:
            return 0, 0
        s, d = count_guccsd_parameters(split.n_orbitals)
        return s, d if include_doubles else 0
    size = {"c": split.n_core, "a": split.n_active, "v": split.n_virtual}
    spaces = "cav"

    def n_pairs(p: str, q: str) -> int:
        return comb(size[p], 2) if p == q else size[p] * size[q]

    singles = 2 * sum(n_pairs(p, q) for p, q in QCT_SINGLE_CLASSES)
    if not include_doubles:
        return singles, 0
    doubles = 0
    # same spin: distinct sorted orbitals w<x<y<z whose spaces are non-decreasing
    for combo in _multisets(spaces, 4):
        ways = 1
        for sp in spaces:
            ways *= comb(size[sp], combo.count(sp))
        if not ways:
            continue
        w, x, y, z = combo
        for frm, to in (((w, x), (y, z)), ((w, y), (x, z))):
            if (_pair_tag(*frm), _pair_tag(*to)) in QCT_DOUBLE_CLASSES:
                doubles += 2 * ways
    # mixed spin: an up pair i<a and a down pair j<b
    ordered = [(p, q) for p in spaces for q in spaces if _CLASS_ORDER[p] <= _CLASS_ORDER[q]]
    for (i, a), (j, b) in product(ordered, repeat=2):
        if (_pair_tag(i, j), _pair_tag(a, b)) in QCT_DOUBLE_CLASSES:
            doubles += n_pairs(i, a) * n_pairs(j, b)
    return singles, doubles


def _multisets(letters: str, k: int) -> list[str]:
    if k == 0:
        return [""]
    if not letters:
        return []
    head, rest = letters[0], letters[1:]
    return [head + m for m in _multisets(letters, k - 1)] + _multisets(rest, k)


# ---------------------------------------------------------------- ansatz circuits


def _rotation_terms(exc: Excitation, n_qubits: int) -> list[tuple[PauliString, float]]:
    """``tau`` as ``i sum_P b_P P`` with real ``b_P``."""
    out = []
    for s in exc.qubit_generator(n_qubits):
        if abs(s.coeff.real) > 1e-12:
            raise ArithmeticError("excitation generator is not anti-Hermitian")
        out.append((s, float(s.coeff.imag)))
    return out


def trotterized_ansatz(pool: ExcitationPool, thetas, n_qubits: int | None = None) -> Circuit:
    """``prod_k exp(theta_k tau_k)`` in pool order, one gadget per Pauli component.

    ``exp(i theta b P)`` is the gadget ``exp(-i phi/2 P)`` with ``phi = -2 theta b``.
    The first excitation acts first on the input state.
    """
    thetas = np.asarray(thetas, dtype=float).ravel()
    if thetas.size != len(pool):
        raise ValueError(f"{thetas.size} angles for a pool of {len(pool)} excitations")
    n = pool.n_qubits if n_qubits is None else n_qubits
    c = Circuit(n)
    for exc, theta in zip(pool, thetas):
        for p, b in _rotation_terms(exc, n):
            c.extend(pauli_gadget(p, -2.0 * theta * b, n, param=exc.slot).gates)
    return c


class CompiledAnsatz:
    """Statevector action of ``trotterized_ansatz`` without building gates.

    Each Pauli factor ``exp(i theta b P) = cos(theta b) + i sin(theta b) P`` is
    applied as an index permutation times a phase.
    """

    def __init__(self, pool: ExcitationPool, n_qubits: int | None = None):
        self.n = pool.n_qubits if n_qubits is None else n_qubits
        dim = 1 << self.n
        self._idx = np.arange(dim)
        self._factors = []
        for exc in pool:
            rots = []
            for p, b in _rotation_terms(exc, self.n):
                x, z = p.masks
                rots.append((self._idx ^ x, _string_diag(x, z, self.n), b))
            self._factors.append(rots)

    def __len__(self) -> int:
        return len(self._factors)

    def apply(self, thetas, state: np.ndarray) -> np.ndarray:
        vec = np.asarray(state, dtype=complex).copy()
        for rots, theta in zip(self._factors, np.asarray(thetas, dtype=float)):
            if theta == 0.0:
                continue
            for perm, phase, b in rots:
                ang = theta * b
                vec = np.cos(ang) * vec + 1j * np.sin(ang) * (phase * vec)[perm]
        return vec
