"""Pauli strings and weighted sums of them.

A string on ``n`` qubits is stored as two integer bitmasks ``(x, z)``: qubit
``k`` carries ``X`` if only bit ``k`` of ``x`` is set, ``Z`` if only bit ``k``
of ``z`` is set and ``Y`` if both are.  The letter form ``"XIZ"`` lists qubit 0
first.  Dense matrices use the same least-significant-first qubit order as
:func:`dmrgqct.mps.to_statevector`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

PRUNE_TOL = 1e-12
MAX_DENSE_QUBITS = 14

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_I_POW = (1, 1j, -1, -1j)
MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


def letters_to_masks(letters: str) -> tuple[int, int]:
    x = z = 0
    for k, ch in enumerate(letters):
        bx, bz = _LETTER_BITS[ch]
        x |= bx << k
        z |= bz << k
    return x, z


def masks_to_letters(x: int, z: int, n: int) -> str:
    return "".join(_BITS_LETTER[((x >> k) & 1, (z >> k) & 1)] for k in range(n))


def multiply_masks(x1: int, z1: int, x2: int, z2: int) -> tuple[complex, int, int]:
    """``P(x1,z1) P(x2,z2) = phase * P(x1^x2, z1^z2)``."""
    x, z = x1 ^ x2, z1 ^ z2
    # P(x,z) = i^{|x&z|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1
    k = _popcount(x1 & z1) + _popcount(x2 & z2) - _popcount(x & z) + 2 * _popcount(z1 & x2)
    return _I_POW[k % 4], x, z


@dataclass(frozen=True)
class PauliString:
    letters: str
    coeff: complex = 1.0

    def __post_init__(self) -> None:
        if any(ch not in _LETTER_BITS for ch in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def masks(self) -> tuple[int, int]:
        return letters_to_masks(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    @property
    def support(self) -> list[int]:
        return [k for k, ch in enumerate(self.letters) if ch != "I"]

    def __mul__(self, other: PauliString) -> PauliString:
        if self.n != other.n:
            raise ValueError("length mismatch")
        phase, x, z = multiply_masks(*self.masks, *other.masks)
        return PauliString(masks_to_letters(x, z, self.n), phase * self.coeff * other.coeff)

    def commutes_with(self, other: PauliString) -> bool:
        x1, z1 = self.masks
        x2, z2 = other.masks
        return (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2 == 0

    def to_matrix(self) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for ch in reversed(self.letters):
            out = np.kron(out, MATRICES[ch])
        return self.coeff * out


class PauliSum:
    """Canonical sum of Pauli strings over a fixed qubit count.

    Duplicate patterns are merged on construction and coefficients below
    ``PRUNE_TOL`` in magnitude are dropped.  Iteration order is sorted by the
    letter pattern, so canonicalization is order independent.
    """

    def __init__(self, n: int, terms: Mapping[tuple[int, int], complex] | None = None):
        if n < 1:
            raise ValueError("a PauliSum needs at least one qubit")
        self.n = n
        self._terms: dict[tuple[int, int], complex] = {}
        full = (1 << n) - 1
        for key, c in (terms or {}).items():
            if key[0] & ~full or key[1] & ~full:
                raise ValueError("Pauli mask exceeds qubit count")
            self._terms[key] = self._terms.get(key, 0.0) + complex(c)
        self._prune()

    def _prune(self) -> None:
        self._terms = {
            k: v
            for k, v in sorted(
                self._terms.items(), key=lambda kv: masks_to_letters(*kv[0], self.n)
            )
            if abs(v) >= PRUNE_TOL
        }

    # construction ------------------------------------------------------
    @classmethod
    def from_strings(cls, n: int, strings: Iterable[PauliString | tuple[str, complex]]) -> PauliSum:
        acc: dict[tuple[int, int], complex] = {}
        for s in strings:
            if not isinstance(s, PauliString):
                s = PauliString(*s)
            if s.n != n:
                raise ValueError("string length does not match n")
            acc[s.masks] = acc.get(s.masks, 0.0) + s.coeff
        return cls(n, acc)

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n, {(0, 0): coeff})

    @classmethod
    def zero(cls, n: int) -> PauliSum:
        return cls(n, {})

    # access ------------------------------------------------------------
    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliString]:
        for (x, z), c in self._terms.items():
            yield PauliString(masks_to_letters(x, z, self.n), c)

    def items(self) -> Iterable[tuple[tuple[int, int], complex]]:
        return self._terms.items()

    def coefficient(self, letters: str) -> complex:
        return self._terms.get(letters_to_masks(letters), 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum) or other.n != self.n:
            return NotImplemented
        diff = self - other
        return len(diff) == 0

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g}) {s.letters}" for s, c in ((s, s.coeff) for s in self))
        return f"PauliSum(n={self.n}: {body or '0'})"

    # algebra -----------------------------------------------------------
    def __add__(self, other: PauliSum) -> PauliSum:
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0.0) + v
        return PauliSum(self.n, acc)

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + other * -1.0

    def __mul__(self, other: PauliSum | complex) -> PauliSum:
        if not isinstance(other, PauliSum):
            return PauliSum(self.n, {k: v * other for k, v in self._terms.items()})
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        acc: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                phase, x, z = multiply_masks(x1, z1, x2, z2)
                acc[(x, z)] = acc.get((x, z), 0.0) + phase * c1 * c2
        return PauliSum(self.n, acc)

    __rmul__ = __mul__

    def dagger(self) -> PauliSum:
        return PauliSum(self.n, {k: np.conj(v) for k, v in self._terms.items()})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_anti_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.real) <= tol for c in self._terms.values())

    def commutator(self, other: PauliSum) -> PauliSum:
        return self * other - other * self

    def restrict(self, fixed: Mapping[int, int]) -> PauliSum:
        """Partial expectation over computational-basis values of ``fixed`` qubits.

        Returns the operator ``<b_fixed| H |b_fixed>`` on the remaining qubits,
        relabelled in increasing order.  Strings with X or Y on a fixed qubit
        drop out; Z contributes ``(-1)^b``.
        """
        free = [q for q in range(self.n) if q not in fixed]
        if not free:
            raise ValueError("restrict needs at least one free qubit")
        fmask = sum(1 << q for q in fixed)
        bits = sum(int(b) << q for q, b in fixed.items())
        acc: dict[tuple[int, int], complex] = {}
        for (x, z), c in self._terms.items():
            if x & fmask:
                continue
            sign = -1.0 if _popcount(z & fmask & bits) % 2 else 1.0
            nx = nz = 0
            for new, old in enumerate(free):
                nx |= ((x >> old) & 1) << new
                nz |= ((z >> old) & 1) << new
            acc[(nx, nz)] = acc.get((nx, nz), 0.0) + sign * c
        return PauliSum(len(free), acc)

    # matrices ----------------------------------------------------------
    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n
        cols = np.arange(dim)
        if not self._terms:
            return sp.csr_matrix((dim, dim), dtype=complex)
        rows, allcols, vals = [], [], []
        for (x, z), c in self._terms.items():
            rows.append(cols ^ x)
            allcols.append(cols)
            vals.append(c * _string_diag(x, z, self.n))
        return sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(allcols))),
            shape=(dim, dim),
        ).tocsr()

    def to_matrix(self) -> np.ndarray:
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"{self.n} qubits exceeds the dense limit {MAX_DENSE_QUBITS}")
        return self.to_sparse().toarray()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """``H |vec>`` without forming a matrix."""
        vec = np.asarray(vec, dtype=complex)
        out = np.zeros_like(vec)
        idx = np.arange(vec.size)
        for (x, z), c in self._terms.items():
            out[idx ^ x] += c * _string_diag(x, z, self.n) * vec
        return out

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"letters": s.letters, "re": float(s.coeff.real), "im": float(s.coeff.imag)}
                for s in self
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> PauliSum:
        return cls.from_strings(
            obj["n"], [(t["letters"], complex(t["re"], t.get("im", 0.0))) for t in obj["terms"]]
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> PauliSum:
        return cls.from_dict(json.loads(text))


_DIAG_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _string_diag(x: int, z: int, n: int) -> np.ndarray:
    """Values ``v[b]`` with ``P |b> = v[b] |b ^ x>``."""
    key = (x, z, n)
    cached = _DIAG_CACHE.get(key)
    if cached is not None:
        return cached
    b = np.arange(1 << n)
    parity = np.zeros(b.size, dtype=np.int64)
    zb = b & z
    for k in range(n):
        parity ^= (zb >> k) & 1
    vals = _I_POW[_popcount(x & z) % 4] * (1 - 2 * parity).astype(complex)
    if len(_DIAG_CACHE) < 4096:
        _DIAG_CACHE[key] = vals
    return vals


def haf_chain(n: int) -> PauliSum:
    """Open Heisenberg chain ``sum_i X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}``."""
    if n < 2:
        raise ValueError("the Heisenberg chain needs at least two sites")
    strings = []
    for i in range(n - 1):
        for p in "XYZ":
            letters = ["I"] * n
            letters[i] = letters[i + 1] = p
            strings.append(("".join(letters), 1.0))
    return PauliSum.from_strings(n, strings)


def total_z(n: int) -> PauliSum:
    return PauliSum.from_strings(n, [("I" * k + "Z" + "I" * (n - k - 1), 1.0) for k in range(n)])


def expectation(h: PauliSum, state) -> float:
    """Real part of ``<psi|H|psi> / <psi|psi>`` for a dense vector or an MPS.

    For a Hermitian ``h`` the imaginary part must vanish to 1e-9.
    """
    from .mps import Mps, local_expectation, overlap

    if isinstance(state, Mps):
        if state.n_sites != h.n:
            raise ValueError("dimension mismatch")
        val = 0.0j
        for s in h:
            ops = {k: MATRICES[ch] for k, ch in enumerate(s.letters) if ch != "I"}
            val += s.coeff * local_expectation(state, ops)
        den = overlap(state, state).real
    else:
        vec = np.asarray(state, dtype=complex).ravel()
        if vec.size != 1 << h.n:
            raise ValueError("dimension mismatch")
        val = np.vdot(vec, h.apply(vec))
        den = np.vdot(vec, vec).real
    val = val / den
    if h.is_hermitian() and abs(val.imag) > 1e-9:
        raise ArithmeticError(f"expectation of a Hermitian operator has imaginary part {val.imag}")
    return float(val.real)
