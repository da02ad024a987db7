"""Two-site DMRG over an MPO built from a PauliSum, plus an exact-diagonalization oracle."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .mps import Mps, SizeGuardError, _n_keep, add_scaled, canonicalize, normalize, product_state, random_mps
from .pauli import MATRICES, PauliSum

log = logging.getLogger(__name__)

MAX_ED_QUBITS = 14
LANCZOS_MAXITER = 100
LANCZOS_TOL = 1e-12
DENSE_LOCAL_DIM = 128
START_NOISE = 1e-3


@dataclass
class Mpo:
    """Tensors with legs ``(left bond, phys out, phys in, right bond)``."""

    tensors: list[np.ndarray]
    hermitian: bool = True

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [w.shape[3] for w in self.tensors[:-1]]

    def to_matrix(self) -> np.ndarray:
        n = self.n_sites
        if n > 12:
            raise SizeGuardError("dense MPO limited to 12 sites")
        out = self.tensors[0][0]  # (o, i, w)
        for w in self.tensors[1:]:
            out = np.tensordot(out, w, axes=([-1], [0]))
        out = out[..., 0]  # (o0, i0, o1, i1, ...)
        outs = [2 * k for k in range(n - 1, -1, -1)]
        ins = [2 * k + 1 for k in range(n - 1, -1, -1)]
        return out.transpose(outs + ins).reshape(2**n, 2**n)

    def expectation(self, state: Mps) -> complex:
        """``<psi|W|psi> / <psi|psi>``."""
        env = np.ones((1, 1, 1), dtype=complex)
        for a, w in zip(state.tensors, self.tensors):
            env = _left_env(env, a, w)
        num = env[0, 0, 0]
        den = np.ones((1, 1), dtype=complex)
        for a in state.tensors:
            den = np.tensordot(den, a, axes=([1], [0]))
            den = np.tensordot(a.conj(), den, axes=([0, 1], [0, 1]))
        return complex(num / den[0, 0])


def mpo_from_pauli_sum(h: PauliSum, cutoff: float = 1e-12) -> Mpo:
    """Exact MPO: one bond channel per string, then SVD-compressed at ``cutoff``.

    The cutoff is relative to the largest singular value on each bond, so the
    compressed operator stays exact to that precision.
    """
    n = h.n
    terms = list(h)
    if not terms:
        return Mpo([np.zeros((1, 2, 2, 1), dtype=complex) for _ in range(n)])
    t = len(terms)
    mats = [[MATRICES[ch] for ch in s.letters] for s in terms]
    if n == 1:
        w = sum(s.coeff * m[0] for s, m in zip(terms, mats))
        return Mpo([w.reshape(1, 2, 2, 1)], hermitian=h.is_hermitian())
    tensors = []
    for j in range(n):
        if j == 0:
            w = np.zeros((1, 2, 2, t), dtype=complex)
            for k, (s, m) in enumerate(zip(terms, mats)):
                w[0, :, :, k] = s.coeff * m[0]
        elif j == n - 1:
            w = np.zeros((t, 2, 2, 1), dtype=complex)
            for k, m in enumerate(mats):
                w[k, :, :, 0] = m[j]
        else:
            w = np.zeros((t, 2, 2, t), dtype=complex)
            for k, m in enumerate(mats):
                w[k, :, :, k] = m[j]
        tensors.append(w)
    return Mpo(_compress_mpo(tensors, cutoff), hermitian=h.is_hermitian())


def _compress_mpo(tensors: list[np.ndarray], cutoff: float) -> list[np.ndarray]:
    n = len(tensors)
    ts = [w.reshape(w.shape[0], 4, w.shape[3]) for w in tensors]
    for j in range(n - 1):
        dl, d, dr = ts[j].shape
        q, r = np.linalg.qr(ts[j].reshape(dl * d, dr))
        ts[j] = q.reshape(dl, d, q.shape[1])
        ts[j + 1] = np.tensordot(r, ts[j + 1], axes=([1], [0]))
    for j in range(n - 1, 0, -1):
        dl, d, dr = ts[j].shape
        u, s, vh = np.linalg.svd(ts[j].reshape(dl, d * dr), full_matrices=False)
        keep = max(1, int(np.count_nonzero(s > cutoff * s[0]))) if s[0] > 0 else 1
        ts[j] = vh[:keep].reshape(keep, d, dr)
        ts[j - 1] = np.tensordot(ts[j - 1], u[:, :keep] * s[:keep], axes=([2], [0]))
    return [t.reshape(t.shape[0], 2, 2, t.shape[2]) for t in ts]


# ---------------------------------------------------------------- DMRG


def _left_env(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    # env (bra, mpo, ket); a (l, p, r); w (wl, po, pi, wr)
    x = np.tensordot(env, a, axes=([2], [0]))  # (bra, mpo, pi, r)
    x = np.tensordot(x, w, axes=([1, 2], [0, 2]))  # (bra, r, po, wr)
    x = np.tensordot(a.conj(), x, axes=([0, 1], [0, 2]))  # (bra r, ket r, wr)
    return x.transpose(0, 2, 1)


def _right_env(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    # env (bra, mpo, ket) for the right block
    x = np.tensordot(a, env, axes=([2], [2]))  # (l, pi, bra, mpo)
    x = np.tensordot(w, x, axes=([2, 3], [1, 3]))  # (wl, po, l, bra)
    x = np.tensordot(a.conj(), x, axes=([1, 2], [1, 3]))  # (bra l, wl, ket l)
    return x


def _two_site_matvec(lenv, w1, w2, renv, shape):
    def matvec(v):
        theta = v.reshape(shape)
        x = np.tensordot(lenv, theta, axes=([2], [0]))  # (a, w, p, q, c)
        x = np.tensordot(x, w1, axes=([1, 2], [0, 2]))  # (a, q, c, p', w2)
        x = np.tensordot(x, w2, axes=([1, 4], [2, 0]))  # (a, c, p', q', w3)
        x = np.tensordot(x, renv, axes=([1, 4], [2, 1]))  # (a, p', q', c')
        return x.reshape(-1)

    return matvec


def _local_ground(matvec, dim: int, v0: np.ndarray) -> tuple[float, np.ndarray]:
    if dim <= DENSE_LOCAL_DIM:
        mat = np.column_stack([matvec(e) for e in np.eye(dim, dtype=complex)])
        mat = 0.5 * (mat + mat.conj().T)
        vals, vecs = np.linalg.eigh(mat)
        return float(vals[0]), vecs[:, 0]
    op = spla.LinearOperator((dim, dim), matvec=matvec, dtype=complex)
    try:
        vals, vecs = spla.eigsh(op, k=1, which="SA", v0=v0, tol=LANCZOS_TOL, maxiter=LANCZOS_MAXITER)
    except spla.ArpackNoConvergence as exc:
        if exc.eigenvalues.size == 0:
            return float(np.vdot(v0, matvec(v0)).real / np.vdot(v0, v0).real), v0
        vals, vecs = exc.eigenvalues, exc.eigenvectors
    return float(vals[0].real), vecs[:, 0]


@dataclass
class DmrgResult:
    state: Mps
    energy: float
    sweep_energies: list[float] = field(default_factory=list)
    converged: bool = False
    delta: float = math.inf  # |dE| of the final sweep

    def __iter__(self) -> Iterator:
        yield self.state
        yield self.energy


def random_product_state(n: int, seed: int | None = 0) -> Mps:
    rng = np.random.default_rng(seed)
    tensors = []
    for _ in range(n):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        tensors.append((v / np.linalg.norm(v)).reshape(1, 2, 1))
    return Mps(tensors, canonical_center=0)


def ground_state_dmrg(
    h: Mpo | PauliSum,
    d_max: int,
    sweeps: int = 20,
    tol: float = 1e-9,
    *,
    initial: Mps | Sequence[int] | None = None,
    seed: int | None = 0,
    start_noise: float = START_NOISE,
) -> DmrgResult:
    """Two-site DMRG ground-state search.

    ``initial`` may be an MPS, an occupation bit list (e.g. a Hartree-Fock
    string) or None for a seeded random product state.  A bit list is mixed
    with a seeded random MPS of weight ``start_noise``: a bare product state
    has unit bonds, and a number-conserving Hamiltonian then cannot move the
    two-site updates off the determinant.  One sweep is a left
    to right pass followed by a right to left pass.  The reported energy is
    ``<psi|H|psi>`` of the returned, truncated state.

    A local update whose truncated result would raise the energy above that
    of the incoming two-site tensor is rejected, so the energy never rises
    from one step to the next and the sweep energies are non-increasing.
    """
    if d_max < 1 or sweeps < 1:
        raise ValueError("d_max and sweeps must be positive")
    if isinstance(h, PauliSum):
        if not h.is_hermitian():
            raise ValueError("DMRG needs a Hermitian Hamiltonian")
        mpo = mpo_from_pauli_sum(h)
    else:
        mpo = h
    if not mpo.hermitian:
        raise ValueError("DMRG needs a Hermitian Hamiltonian")
    n = mpo.n_sites
    if initial is None:
        state = random_product_state(n, seed)
    elif isinstance(initial, Mps):
        state = initial.copy()
    else:
        state = product_state(initial)
        if start_noise and state.n_sites > 1:
            noise = random_mps(state.n_sites, min(d_max, 2), seed=seed)
            state = normalize(add_scaled(state, start_noise, noise))
    if state.n_sites != n:
        raise ValueError("initial state has the wrong number of sites")
    if n == 1:
        mat = mpo.tensors[0][0, :, :, 0]
        vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
        out = Mps([vecs[:, 0].reshape(1, 2, 1)], canonical_center=0)
        return DmrgResult(out, float(vals[0]), [float(vals[0])], True, 0.0)

    state = canonicalize(state, 0)
    state.norm_log = 0.0
    ts = state.tensors
    ws = mpo.tensors
    lenvs: list[np.ndarray | None] = [None] * (n + 1)
    renvs: list[np.ndarray | None] = [None] * (n + 1)
    lenvs[0] = np.ones((1, 1, 1), dtype=complex)
    renvs[n] = np.ones((1, 1, 1), dtype=complex)
    for j in range(n - 1, 0, -1):
        renvs[j] = _right_env(renvs[j + 1], ts[j], ws[j])

    def update(j: int, move_right: bool) -> float:
        a, b = ts[j], ts[j + 1]
        theta = np.tensordot(a, b, axes=([2], [0]))
        shape = theta.shape
        mv = _two_site_matvec(lenvs[j], ws[j], ws[j + 1], renvs[j + 2], shape)
        old = theta.reshape(-1)
        e_old = float(np.vdot(old, mv(old)).real)
        e, vec = _local_ground(mv, theta.size, old)
        dl, dr = shape[0], shape[3]
        u, s, vh = np.linalg.svd(vec.reshape(dl * 2, 2 * dr), full_matrices=False)
        keep = _n_keep(s, d_max)
        s = s[:keep] / np.linalg.norm(s[:keep])
        trial = (u[:, :keep] * s) @ vh[:keep]
        e_trunc = float(np.vdot(trial, mv(trial.reshape(-1)).reshape(trial.shape)).real)
        if e_trunc > e_old:
            # truncation undid the local gain; keep the incoming tensor, which fits in d_max
            u, s, vh = np.linalg.svd(old.reshape(dl * 2, 2 * dr), full_matrices=False)
            keep = _n_keep(s, d_max)
            s = s[:keep] / np.linalg.norm(s[:keep])
            e_trunc = e_old
        if move_right:
            ts[j] = u[:, :keep].reshape(dl, 2, keep)
            ts[j + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, dr)
            lenvs[j + 1] = _left_env(lenvs[j], ts[j], ws[j])
        else:
            ts[j] = (u[:, :keep] * s[None, :]).reshape(dl, 2, keep)
            ts[j + 1] = vh[:keep].reshape(keep, 2, dr)
            renvs[j + 1] = _right_env(renvs[j + 2], ts[j + 1], ws[j + 1])
        return e_trunc

    energies: list[float] = []
    converged = False
    delta = math.inf
    for sweep in range(sweeps):
        for j in range(0, n - 1):
            update(j, True)
        for j in range(n - 2, -1, -1):
            update(j, False)
        result = Mps(list(ts), canonical_center=0)
        e = mpo.expectation(result).real
        if energies:
            delta = abs(energies[-1] - e)
            if e > energies[-1] + 1e-10:
                log.warning("DMRG energy rose by %.3g in sweep %d", e - energies[-1], sweep)
        energies.append(e)
        log.debug("sweep %d: E = %.12f, bonds %s", sweep, e, result.bond_dims)
        if delta < tol:
            converged = True
            break
    final = Mps([t.copy() for t in ts], canonical_center=0)
    return DmrgResult(final, energies[-1], energies, converged, delta)


def exact_diagonalize(h: PauliSum) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the dense (or sparse, above 10 qubits) matrix."""
    if h.n > MAX_ED_QUBITS:
        raise SizeGuardError(f"{h.n} qubits exceeds the exact-diagonalization limit {MAX_ED_QUBITS}")
    if h.n <= 10:
        vals, vecs = np.linalg.eigh(h.to_matrix())
        return float(vals[0]), vecs[:, 0]
    mat = h.to_sparse()
    rng = np.random.default_rng(0)
    v0 = rng.normal(size=mat.shape[0]) + 0j
    vals, vecs = spla.eigsh(mat, k=1, which="SA", v0=v0, tol=1e-13)
    return float(vals[0]), vecs[:, 0]
