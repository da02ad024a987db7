"""Fermionic ladder-operator algebra and the Jordan-Wigner map.

Spin orbitals are interleaved: spatial orbital ``p`` with spin up is mode
``2p``, spin down is ``2p + 1``.  Under Jordan-Wigner, mode ``j`` is qubit ``j``,
an occupied mode is ``|1>``, and

    a_j^dagger = (X_j - i Y_j) / 2  *  Z_0 Z_1 ... Z_{j-1}.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Mapping

from .pauli import PauliSum, letters_to_masks

# a term is a tuple of (mode, is_creation) factors, leftmost first
Term = tuple[tuple[int, bool], ...]


def spin_orbital(spatial: int, spin: int) -> int:
    """Mode index of ``spatial`` with ``spin`` 0 (up) or 1 (down)."""
    return 2 * spatial + spin


class FermionOperator:
    """Linear combination of products of ladder operators."""

    def __init__(self, terms: Mapping[Term, complex] | None = None):
        self.terms: dict[Term, complex] = {}
        for t, c in (terms or {}).items():
            t = tuple((int(i), bool(d)) for i, d in t)
            self.terms[t] = self.terms.get(t, 0.0) + complex(c)
        self.terms = {t: c for t, c in self.terms.items() if abs(c) > 1e-14}

    @classmethod
    def product(cls, factors: Iterable[tuple[int, bool]], coeff: complex = 1.0) -> FermionOperator:
        return cls({tuple(factors): coeff})

    @classmethod
    def excitation(cls, to: Iterable[int], frm: Iterable[int], coeff: complex = 1.0) -> FermionOperator:
        """``a^dag_{to_0} a^dag_{to_1} ... a_{frm_1} a_{frm_0}`` (annihilators reversed)."""
        to, frm = list(to), list(frm)
        factors = [(p, True) for p in to] + [(q, False) for q in reversed(frm)]
        return cls.product(factors, coeff)

    def __add__(self, other: FermionOperator) -> FermionOperator:
        acc = dict(self.terms)
        for t, c in other.terms.items():
            acc[t] = acc.get(t, 0.0) + c
        return FermionOperator(acc)

    def __sub__(self, other: FermionOperator) -> FermionOperator:
        return self + other * -1.0

    def __mul__(self, other: FermionOperator | complex) -> FermionOperator:
        if not isinstance(other, FermionOperator):
            return FermionOperator({t: c * other for t, c in self.terms.items()})
        acc: dict[Term, complex] = {}
        for t1, c1 in self.terms.items():
            for t2, c2 in other.terms.items():
                acc[t1 + t2] = acc.get(t1 + t2, 0.0) + c1 * c2
        return FermionOperator(acc)

    __rmul__ = __mul__

    def dagger(self) -> FermionOperator:
        return FermionOperator(
            {tuple((i, not d) for i, d in reversed(t)): c.conjugate() for t, c in self.terms.items()}
        )

    def max_mode(self) -> int:
        return max((i for t in self.terms for i, _ in t), default=-1)

    def normal_ordered(self) -> FermionOperator:
        """Creators left of annihilators, each group in descending mode order."""
        acc: dict[Term, complex] = {}
        for t, c in self.terms.items():
            for nt, nc in _normal_order_term(t).items():
                acc[nt] = acc.get(nt, 0.0) + c * nc
        return FermionOperator(acc)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FermionOperator):
            return NotImplemented
        return not (self - other).normal_ordered().terms

    def __repr__(self) -> str:
        return f"FermionOperator({self.terms})"


def _normal_order_term(term: Term) -> dict[Term, complex]:
    out: dict[Term, complex] = {}
    stack: list[tuple[list[tuple[int, bool]], complex]] = [(list(term), 1.0)]
    while stack:
        ops, coeff = stack.pop()
        for k in range(len(ops) - 1):
            (i, di), (j, dj) = ops[k], ops[k + 1]
            if i == j and di == dj:
                break  # a a = 0
            # target order: creators first, larger mode first within a kind
            if (not di and dj) or (di == dj and i < j):
                stack.append((ops[:k] + [ops[k + 1], ops[k]] + ops[k + 2 :], -coeff))
                if i == j:
                    stack.append((ops[:k] + ops[k + 2 :], coeff))
                break
        else:
            key = tuple(ops)
            out[key] = out.get(key, 0.0) + coeff
    return {k: v for k, v in out.items() if abs(v) > 1e-14}


@lru_cache(maxsize=None)
def _ladder(mode: int, creation: bool, n: int) -> PauliSum:
    tail = "Z" * mode
    rest = "I" * (n - mode - 1)
    sign = -1j if creation else 1j
    return PauliSum(
        n,
        {
            letters_to_masks(tail + "X" + rest): 0.5,
            letters_to_masks(tail + "Y" + rest): 0.5 * sign,
        },
    )


def jordan_wigner(op: FermionOperator, n: int) -> PauliSum:
    """Qubit image of ``op`` on ``n`` qubits."""
    if op.max_mode() >= n:
        raise ValueError(f"mode {op.max_mode()} does not fit in {n} qubits")
    total: dict[tuple[int, int], complex] = {}
    for term, c in op.terms.items():
        acc = PauliSum.identity(n, c)
        for mode, creation in term:
            acc = acc * _ladder(mode, creation, n)
            if not len(acc):
                break
        for key, v in acc.items():
            total[key] = total.get(key, 0.0) + v
    return PauliSum(n, total)


def number_operator(n: int, modes: Iterable[int] | None = None) -> PauliSum:
    modes = range(n) if modes is None else modes
    op = FermionOperator({((p, True), (p, False)): 1.0 for p in modes})
    return jordan_wigner(op, n)
