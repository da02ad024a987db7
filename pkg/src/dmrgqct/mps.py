"""Open-boundary matrix product states.

Each site tensor has legs ``(left bond, physical, right bond)`` with boundary
bonds of dimension one.  The represented vector is
``exp(norm_log) * contract(tensors)``, so unnormalized intermediates keep
well-scaled tensors.

Statevector convention: site ``j`` is bit ``j`` of the basis index, least
significant first.  The two-site product ``|i_0 i_1>`` is therefore the basis
vector at index ``i_0 + 2 * i_1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np

PHYS_DIM = 2
MAX_DENSE_SITES = 24
# singular values below this fraction of the largest are dropped
SV_FLOOR = 1e-14


class SizeGuardError(ValueError):
    """Raised when a dense operation would exceed its memory guard."""


@dataclass
class Mps:
    tensors: list[np.ndarray]
    canonical_center: int | None = None
    norm_log: float = 0.0
    physical_dim: int = field(default=PHYS_DIM)

    def __post_init__(self) -> None:
        if not self.tensors:
            raise ValueError("an MPS needs at least one site")
        self.tensors = [np.asarray(t, dtype=complex) for t in self.tensors]
        for j, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != self.physical_dim:
                raise ValueError(f"site {j}: bad tensor shape {t.shape}")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for j in range(len(self.tensors) - 1):
            if self.tensors[j].shape[2] != self.tensors[j + 1].shape[0]:
                raise ValueError(f"bond {j + 1} dimension mismatch")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        """Dimensions of the ``n_sites - 1`` internal bonds."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> Mps:
        return replace(self, tensors=[t.copy() for t in self.tensors])

    def conj(self) -> Mps:
        return replace(self, tensors=[t.conj() for t in self.tensors])

    def scaled(self, factor: complex) -> Mps:
        """Return ``factor * self`` keeping magnitudes in ``norm_log``."""
        if factor == 0:
            return replace(self.copy(), norm_log=-math.inf)
        out = self.copy()
        mag = abs(factor)
        out.tensors[0] = out.tensors[0] * (factor / mag)
        out.norm_log = self.norm_log + math.log(mag)
        return out


@dataclass(frozen=True)
class SchmidtSpectrum:
    cut_index: int
    values: np.ndarray


# ---------------------------------------------------------------- constructors


def product_state(bits: Sequence[int] | str) -> Mps:
    """Computational basis product state; ``bits[j]`` is the value on site ``j``."""
    tensors = []
    for b in bits:
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, int(b), 0] = 1.0
        tensors.append(t)
    return Mps(tensors, canonical_center=0)


def zero_state(n_sites: int) -> Mps:
    return product_state([0] * n_sites)


def random_mps(
    n_sites: int, bond_dim: int, seed: int | np.random.Generator | None = None
) -> Mps:
    """Normalized random complex MPS with bond dims ``min(D, 2^j, 2^(n-j))``."""
    rng = np.random.default_rng(seed)
    dims = [1] + [min(bond_dim, 2**j, 2 ** (n_sites - j)) for j in range(1, n_sites)] + [1]
    tensors = [
        rng.normal(size=(dims[j], 2, dims[j + 1]))
        + 1j * rng.normal(size=(dims[j], 2, dims[j + 1]))
        for j in range(n_sites)
    ]
    return normalize(Mps(tensors))


def ghz_state(n_sites: int) -> Mps:
    """``(|0...0> + |1...1>) / sqrt(2)`` with bond dimension two."""
    if n_sites == 1:
        return Mps([np.array([[[1.0], [1.0]]]) / math.sqrt(2)])
    first = np.zeros((1, 2, 2))
    first[0, 0, 0] = first[0, 1, 1] = 1 / math.sqrt(2)
    bulk = np.zeros((2, 2, 2))
    bulk[0, 0, 0] = bulk[1, 1, 1] = 1.0
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = last[1, 1, 0] = 1.0
    return Mps([first] + [bulk.copy() for _ in range(n_sites - 2)] + [last])


def from_statevector(vec: np.ndarray, d_max: int | None = None) -> Mps:
    """Exact (or ``d_max``-truncated) MPS of a dense LSB-first statevector."""
    vec = np.asarray(vec, dtype=complex).ravel()
    n = int(round(math.log2(vec.size)))
    if 2**n != vec.size:
        raise ValueError("vector length must be a power of two")
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot build an MPS of the zero vector")
    # C-order axes of the reshaped vector run from qubit n-1 down to qubit 0
    psi = (vec / norm).reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1)))
    tensors = []
    rest = psi.reshape(1, -1)
    for _ in range(n - 1):
        dl = rest.shape[0]
        mat = rest.reshape(dl * 2, -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = _n_keep(s, d_max)
        tensors.append(u[:, :keep].reshape(dl, 2, keep))
        rest = s[:keep, None] * vh[:keep]
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    out = Mps(tensors, canonical_center=n - 1, norm_log=math.log(norm))
    return _renormalize_center(out)


def to_statevector(state: Mps) -> np.ndarray:
    """Dense ``2**M`` vector, site ``j`` on bit ``j`` (least significant first)."""
    n = state.n_sites
    if n > MAX_DENSE_SITES:
        raise SizeGuardError(f"{n} sites exceeds the dense limit of {MAX_DENSE_SITES}")
    psi = state.tensors[0][0]  # (2, D)
    for t in state.tensors[1:]:
        psi = np.tensordot(psi, t, axes=([-1], [0]))
    psi = psi[..., 0]
    if n > 1:
        psi = psi.transpose(tuple(range(n - 1, -1, -1)))
    scale = 0.0 if state.norm_log == -math.inf else math.exp(state.norm_log)
    return scale * psi.reshape(-1)


# ---------------------------------------------------------------- canonical form


def _qr_pos(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with a non-negative real diagonal in R (unique for full rank)."""
    q, r = np.linalg.qr(mat)
    d = np.diagonal(r).copy()
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    q = q * phase[None, :]
    r = phase.conj()[:, None] * r
    return q, r


def _sweep_left_to(tensors: list[np.ndarray], start: int, stop: int) -> None:
    """Left-orthonormalize sites ``start .. stop-1``, pushing weight to ``stop``."""
    for j in range(start, stop):
        a = tensors[j]
        dl, d, dr = a.shape
        q, r = _qr_pos(a.reshape(dl * d, dr))
        tensors[j] = q.reshape(dl, d, q.shape[1])
        tensors[j + 1] = np.tensordot(r, tensors[j + 1], axes=([1], [0]))


def _sweep_right_to(tensors: list[np.ndarray], start: int, stop: int) -> None:
    """Right-orthonormalize sites ``start`` down to ``stop+1``, pushing weight to ``stop``."""
    for j in range(start, stop, -1):
        a = tensors[j]
        dl, d, dr = a.shape
        q, r = _qr_pos(a.reshape(dl, d * dr).T)
        tensors[j] = q.T.reshape(q.shape[1], d, dr)
        tensors[j - 1] = np.tensordot(tensors[j - 1], r.T, axes=([2], [0]))


def _renormalize_center(state: Mps) -> Mps:
    c = state.canonical_center
    norm = np.linalg.norm(state.tensors[c])
    if norm == 0:
        state.norm_log = -math.inf
        return state
    state.tensors[c] = state.tensors[c] / norm
    state.norm_log += math.log(norm)
    return state


def canonicalize(state: Mps, center: int) -> Mps:
    """Mixed-canonical form with orthogonality center ``center``.

    Tensors left of the center are left isometries, tensors right of it right
    isometries, and the center tensor has unit Frobenius norm (the norm lives
    in ``norm_log``).  If the input is already canonical only the sites between
    the old and new center are touched.
    """
    n = state.n_sites
    if not 0 <= center < n:
        raise IndexError(f"center {center} out of range for {n} sites")
    out = state.copy()
    old = state.canonical_center
    if old is None:
        _sweep_left_to(out.tensors, 0, center)
        _sweep_right_to(out.tensors, n - 1, center)
    elif old < center:
        _sweep_left_to(out.tensors, old, center)
    elif old > center:
        _sweep_right_to(out.tensors, old, center)
    out.canonical_center = center
    return _renormalize_center(out)


def is_canonical(state: Mps, tol: float = 1e-10) -> bool:
    c = state.canonical_center
    if c is None:
        return False
    for j, a in enumerate(state.tensors):
        dl, d, dr = a.shape
        if j < c:
            m = a.reshape(dl * d, dr)
            gram, eye = m.conj().T @ m, np.eye(dr)
        elif j > c:
            m = a.reshape(dl, d * dr)
            gram, eye = m @ m.conj().T, np.eye(dl)
        else:
            continue
        if np.linalg.norm(gram - eye) > tol:
            return False
    return True


def normalize(state: Mps) -> Mps:
    """Canonical (center 0), unit-norm copy of ``state``."""
    out = canonicalize(state, 0 if state.canonical_center is None else state.canonical_center)
    out.norm_log = 0.0 if out.norm_log != -math.inf else -math.inf
    return out


def norm(state: Mps) -> float:
    return math.sqrt(max(overlap(state, state).real, 0.0))


# ---------------------------------------------------------------- compression


def _n_keep(s: np.ndarray, d_max: int | None) -> int:
    if s.size == 0 or s[0] == 0:
        return 1
    keep = int(np.count_nonzero(s > SV_FLOOR * s[0]))
    keep = max(keep, 1)
    if d_max is not None:
        keep = min(keep, d_max)
    return keep


def compress(
    state: Mps, d_max: int, *, normalize_output: bool = True
) -> tuple[Mps, float]:
    """SVD-truncate every bond to at most ``d_max``.

    The state is brought to left-canonical form and swept right to left, so
    each truncation acts on true Schmidt values.  The returned error is
    ``1 - fidelity`` and equals ``1 - prod(1 - eps_b)`` where ``eps_b`` is the
    discarded normalized weight at bond ``b``.  Ties at the truncation
    boundary keep the earlier singular vector; the fidelity does not depend on
    that choice.

    With ``normalize_output=False`` the result is the orthogonal projection of
    the input, with norm ``|psi| * sqrt(fidelity)``.
    """
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    if state.max_bond <= d_max:
        out = state.copy()
        if normalize_output:
            out = normalize(out)
        return out, 0.0
    n = state.n_sites
    work = canonicalize(state, n - 1)
    tensors = work.tensors
    kept_weight = 1.0
    for j in range(n - 1, 0, -1):
        a = tensors[j]
        dl, d, dr = a.shape
        u, s, vh = np.linalg.svd(a.reshape(dl, d * dr), full_matrices=False)
        total = float(np.sum(s**2))
        keep = _n_keep(s, d_max)
        s_kept = s[:keep]
        frac = float(np.sum(s_kept**2)) / total if total > 0 else 1.0
        kept_weight *= frac
        s_kept = s_kept / math.sqrt(float(np.sum(s_kept**2)))
        tensors[j] = vh[:keep].reshape(keep, d, dr)
        tensors[j - 1] = np.tensordot(tensors[j - 1], u[:, :keep] * s_kept, axes=([2], [0]))
    out = Mps(tensors, canonical_center=0, norm_log=work.norm_log)
    out = _renormalize_center(out)
    if normalize_output:
        out.norm_log = 0.0
    else:
        out.norm_log += 0.5 * math.log(kept_weight) if kept_weight > 0 else -math.inf
    return out, 1.0 - kept_weight


# ---------------------------------------------------------------- arithmetic


def overlap(a: Mps, b: Mps) -> complex:
    """``<a|b>`` including both log-scales."""
    if a.n_sites != b.n_sites:
        raise ValueError("overlap of states with different site counts")
    if a.norm_log == -math.inf or b.norm_log == -math.inf:
        return 0.0j
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, tb, axes=([1], [0]))  # (la, p, rb)
        env = np.tensordot(ta.conj(), env, axes=([0, 1], [0, 1]))  # (ra, rb)
    return complex(env[0, 0]) * math.exp(a.norm_log + b.norm_log)


def fidelity(a: Mps, b: Mps) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)``; insensitive to global phase."""
    num = abs(overlap(a, b)) ** 2
    den = overlap(a, a).real * overlap(b, b).real
    return float(num / den) if den > 0 else 0.0


def add_scaled(a: Mps, kappa: complex, b: Mps) -> Mps:
    """Exact ``a + kappa * b`` as a direct-sum MPS (bond dims add)."""
    if a.n_sites != b.n_sites:
        raise ValueError("add_scaled of states with different site counts")
    n = a.n_sites
    la = a.norm_log
    lb = b.norm_log + (math.log(abs(kappa)) if kappa != 0 else -math.inf)
    ref = max(la, lb)
    if ref == -math.inf:
        return replace(a.copy(), canonical_center=None, norm_log=-math.inf)
    wa = math.exp(la - ref) if la != -math.inf else 0.0
    wb = math.exp(lb - ref) * (kappa / abs(kappa)) if lb != -math.inf else 0.0
    if n == 1:
        t = wa * a.tensors[0] + wb * b.tensors[0]
        return Mps([t], canonical_center=None, norm_log=ref)
    tensors = []
    for j, (ta, tb) in enumerate(zip(a.tensors, b.tensors)):
        if j == 0:
            t = np.concatenate([wa * ta, wb * tb], axis=2)
        elif j == n - 1:
            t = np.concatenate([ta, tb], axis=0)
        else:
            dla, d, dra = ta.shape
            dlb, _, drb = tb.shape
            t = np.zeros((dla + dlb, d, dra + drb), dtype=complex)
            t[:dla, :, :dra] = ta
            t[dla:, :, dra:] = tb
        tensors.append(t)
    return Mps(tensors, canonical_center=None, norm_log=ref)


def linear_combination(states: Sequence[Mps], coeffs: Iterable[complex]) -> Mps:
    coeffs = list(coeffs)
    out = states[0].scaled(coeffs[0])
    for s, c in zip(states[1:], coeffs[1:]):
        out = add_scaled(out, c, s)
    return out


# ---------------------------------------------------------------- analysis


def schmidt_spectrum(state: Mps, cut: int) -> SchmidtSpectrum:
    """Schmidt values across the bond between sites ``cut - 1`` and ``cut``."""
    n = state.n_sites
    if not 1 <= cut <= n - 1:
        raise IndexError(f"cut {cut} out of range 1..{n - 1}")
    work = canonicalize(state, cut - 1)
    a = work.tensors[cut - 1]
    dl, d, dr = a.shape
    s = np.linalg.svd(a.reshape(dl * d, dr), compute_uv=False)
    s = s[: _n_keep(s, None)]
    s = s / np.linalg.norm(s)
    return SchmidtSpectrum(cut, s)


def schmidt_rank(state: Mps, cut: int) -> int:
    return int(schmidt_spectrum(state, cut).values.size)


def bond_profile(state: Mps) -> list[int]:
    """Numerical Schmidt rank at every bond (floor ``SV_FLOOR * s_max``)."""
    return [schmidt_rank(state, c) for c in range(1, state.n_sites)]


def local_expectation(state: Mps, ops: dict[int, np.ndarray]) -> complex:
    """``<psi| prod_j ops[j] |psi>`` for one-site operators, unnormalized."""
    env = np.ones((1, 1), dtype=complex)
    for j, t in enumerate(state.tensors):
        tb = t if j not in ops else np.einsum("ps,asb->apb", ops[j], t)
        env = np.tensordot(env, tb, axes=([1], [0]))
        env = np.tensordot(t.conj(), env, axes=([0, 1], [0, 1]))
    if state.norm_log == -math.inf:
        return 0.0j
    return complex(env[0, 0]) * math.exp(2 * state.norm_log)


# ---------------------------------------------------------------- gates


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and (
        np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) <= tol
    )


def apply_two_site_gate(
    state: Mps,
    gate: np.ndarray,
    site: int,
    d_max: int | None = None,
    *,
    center: Literal["left", "right"] = "right",
) -> Mps:
    """Apply a 4x4 unitary to sites ``(site, site + 1)``.

    The gate's basis index is ``2 * i_site + i_{site+1}``, so a product gate
    is ``np.kron(u_site, u_next)``.  The state is first centered on the pair,
    which makes the optional ``d_max`` truncation optimal.  The new center is
    the left or right site of the pair, as requested.
    """
    n = state.n_sites
    if not 0 <= site <= n - 2:
        raise IndexError(f"two-site gate at {site} out of range for {n} sites")
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4) or not is_unitary(gate):
        raise ValueError("gate must be a 4x4 unitary")
    if state.canonical_center in (site, site + 1):
        work = state.copy()
    else:
        work = canonicalize(state, site)
    a, b = work.tensors[site], work.tensors[site + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=([2], [0]))  # (dl, p, q, dr)
    g = gate.reshape(2, 2, 2, 2)
    theta = np.einsum("pqst,astb->apqb", g, theta)
    u, s, vh = np.linalg.svd(theta.reshape(dl * 2, 2 * dr), full_matrices=False)
    keep = _n_keep(s, d_max)
    s = s[:keep] / np.linalg.norm(s[:keep])
    u, vh = u[:, :keep], vh[:keep]
    if center == "right":
        work.tensors[site] = u.reshape(dl, 2, keep)
        work.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, dr)
        work.canonical_center = site + 1
    else:
        work.tensors[site] = (u * s[None, :]).reshape(dl, 2, keep)
        work.tensors[site + 1] = vh.reshape(keep, 2, dr)
        work.canonical_center = site
    return work


def apply_one_site_gate(state: Mps, gate: np.ndarray, site: int) -> Mps:
    out = state.copy()
    out.tensors[site] = np.einsum("ps,asb->apb", np.asarray(gate), out.tensors[site])
    return out


# ---------------------------------------------------------------- serialization


def _complex_array_to_json(a: np.ndarray) -> dict:
    flat = np.asarray(a, dtype=complex).ravel()
    return {"shape": list(a.shape), "data": [[float(z.real), float(z.imag)] for z in flat]}


def _complex_array_from_json(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=float).reshape(-1, 2)
    return (data[:, 0] + 1j * data[:, 1]).reshape(obj["shape"])


def mps_to_dict(state: Mps) -> dict:
    """JSON-ready dict: tensors as row-major ``[re, im]`` pairs with shapes."""
    return {
        "n_sites": state.n_sites,
        "phys_dim": state.physical_dim,
        "bond_dims": state.bond_dims,
        "canonical_center": state.canonical_center,
        "norm_log": None if state.norm_log == -math.inf else state.norm_log,
        "tensors": [_complex_array_to_json(t) for t in state.tensors],
    }


def mps_from_dict(obj: dict) -> Mps:
    tensors = [_complex_array_from_json(t) for t in obj["tensors"]]
    if len(tensors) != obj["n_sites"]:
        raise ValueError("n_sites does not match the tensor list")
    state = Mps(
        tensors,
        canonical_center=obj.get("canonical_center"),
        norm_log=-math.inf if obj.get("norm_log", 0.0) is None else obj.get("norm_log", 0.0),
        physical_dim=obj.get("phys_dim", PHYS_DIM),
    )
    if list(obj.get("bond_dims", state.bond_dims)) != state.bond_dims:
        raise ValueError("bond_dims does not match the tensors")
    return state


def dumps(state: Mps) -> str:
    return json.dumps(mps_to_dict(state))


def loads(text: str) -> Mps:
    return mps_from_dict(json.loads(text))
