"""Molecular integrals from FCIDUMP files and their qubit Hamiltonians."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

from .fermion import FermionOperator, jordan_wigner, spin_orbital
from .pauli import PauliSum


class FcidumpError(ValueError):
    pass


@dataclass
class MolecularIntegrals:
    """Spatial-orbital integrals in chemists' notation, 0-based indices."""

    n_orbitals: int
    n_electrons: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    ms2: int = 0

    def check_symmetry(self, tol: float = 1e-10) -> bool:
        h, g = self.one_body, self.two_body
        perms = [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (1, 0, 3, 2),
                 (3, 2, 1, 0), (2, 3, 1, 0), (3, 2, 0, 1)]
        return np.allclose(h, h.T, atol=tol) and all(
            np.allclose(g, g.transpose(p), atol=tol) for p in perms
        )

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orbitals


_HEADER_INT = re.compile(r"\b(NORB|NELEC|MS2)\s*=\s*(-?\d+)", re.IGNORECASE)


def parse_fcidump(text: str) -> MolecularIntegrals:
    """Read Molpro-style FCIDUMP text (1-based indices in the file)."""
    lines = text.splitlines()
    header_end = None
    for k, line in enumerate(lines):
        stripped = line.strip().upper()
        if stripped.startswith("&END") or stripped == "/" or stripped.endswith("&END"):
            header_end = k
            break
    if header_end is None:
        raise FcidumpError("FCIDUMP header is not terminated by &END or /")
    header = " ".join(lines[: header_end + 1])
    if "&FCI" not in header.upper():
        raise FcidumpError("FCIDUMP header does not start with &FCI")
    fields = {m.group(1).upper(): int(m.group(2)) for m in _HEADER_INT.finditer(header)}
    if "NORB" not in fields or "NELEC" not in fields:
        raise FcidumpError("FCIDUMP header lacks NORB or NELEC")
    norb = fields["NORB"]
    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    core = None
    for lineno, line in enumerate(lines[header_end + 1 :], start=header_end + 2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l'")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {lineno}: {exc}") from None
        if any(not 0 <= x <= norb for x in (i, j, k, l)):
            raise FcidumpError(f"line {lineno}: index out of range 0..{norb}")
        if i == j == k == l == 0:
            core = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                continue  # orbital energy line
            p, q = i - 1, j - 1
            h[p, q] = h[q, p] = val
        elif 0 in (i, j, k, l):
            raise FcidumpError(f"line {lineno}: partially zero two-body index")
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                g[a, b, c, d] = g[c, d, a, b] = val
    if core is None:
        raise FcidumpError("FCIDUMP has no core-energy line (0 0 0 0)")
    return MolecularIntegrals(norb, fields["NELEC"], core, h, g, fields.get("MS2", 0))


def read_fcidump(path: str | Path) -> MolecularIntegrals:
    return parse_fcidump(Path(path).read_text())


def write_fcidump(ints: MolecularIntegrals, tol: float = 1e-15) -> str:
    """Serialize with 8-fold symmetry reduction (``i>=j, k>=l, ij>=kl``)."""
    n = ints.n_orbitals
    out = [f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},", " &END"]
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    v = ints.two_body[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f" {v:.17g} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            v = ints.one_body[i, j]
            if abs(v) > tol:
                out.append(f" {v:.17g} {i + 1} {j + 1} 0 0")
    out.append(f" {ints.core_energy:.17g} 0 0 0 0")
    return "\n".join(out) + "\n"


def hartree_fock_energy(ints: MolecularIntegrals) -> float:
    """Closed-shell determinant energy with the lowest ``n_electrons/2`` orbitals filled."""
    if ints.n_electrons % 2:
        raise ValueError("closed-shell energy needs an even electron count")
    occ = range(ints.n_electrons // 2)
    h, g = ints.one_body, ints.two_body
    e = ints.core_energy + 2 * sum(h[i, i] for i in occ)
    for i in occ:
        for j in occ:
            e += 2 * g[i, i, j, j] - g[i, j, j, i]
    return float(e)


def hartree_fock_bits(n_qubits: int, n_electrons: int) -> list[int]:
    """Occupation of the lowest ``n_electrons`` interleaved spin orbitals."""
    return [1 if q < n_electrons else 0 for q in range(n_qubits)]


def molecular_fermion_operator(ints: MolecularIntegrals, tol: float = 1e-14) -> FermionOperator:
    n = ints.n_orbitals
    terms: dict = {(): ints.core_energy}
    for p, q in product(range(n), repeat=2):
        v = ints.one_body[p, q]
        if abs(v) < tol:
            continue
        for s in (0, 1):
            key = ((spin_orbital(p, s), True), (spin_orbital(q, s), False))
            terms[key] = terms.get(key, 0.0) + v
    for p, q, r, s in product(range(n), repeat=4):
        v = ints.two_body[p, q, r, s]
        if abs(v) < tol:
            continue
        for sig, tau in product((0, 1), repeat=2):
            if p == r and sig == tau:
                continue
            key = (
                (spin_orbital(p, sig), True),
                (spin_orbital(r, tau), True),
                (spin_orbital(s, tau), False),
                (spin_orbital(q, sig), False),
            )
            terms[key] = terms.get(key, 0.0) + 0.5 * v
    return FermionOperator(terms)


def molecular_hamiltonian(ints: MolecularIntegrals) -> PauliSum:
    """Jordan-Wigner qubit Hamiltonian on ``2 * n_orbitals`` qubits."""
    return jordan_wigner(molecular_fermion_operator(ints), ints.n_qubits)


FIXTURES = ("h2_sto3g", "h4_sto3g")


def load_fixture(name: str) -> tuple[MolecularIntegrals, dict]:
    """Bundled FCIDUMP fixture plus its recorded HF and FCI energies."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    data = resources.files("dmrgqct") / "data"
    ints = parse_fcidump((data / f"{name}.fcidump").read_text())
    refs = json.loads((data / "references.json").read_text())[name]
    return ints, refs
