"""Shared fixtures: dense helpers and cached ground states."""

from __future__ import annotations

import numpy as np
import pytest

from dmrgqct.dmrg import exact_diagonalize, ground_state_dmrg
from dmrgqct.mps import from_statevector
from dmrgqct.pauli import haf_chain


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def dense_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def haf_ground():
    """``n -> (exact energy, exact MPS)`` for small Heisenberg chains, cached."""
    cache: dict[int, tuple] = {}

    def get(n: int):
        if n not in cache:
            e, vec = exact_diagonalize(haf_chain(n))
            cache[n] = (e, from_statevector(vec))
        return cache[n]

    return get


@pytest.fixture(scope="session")
def haf16_target():
    """DMRG ground state of the 16-site chain at bond dimension 16 (``D_0 = 16``)."""
    return ground_state_dmrg(haf_chain(16), 16, 20, seed=0)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store and print one acceptance line, then assert it."""
    line = f"criterion {criterion:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[criterion] = (ok, detail)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}: {detail}")
