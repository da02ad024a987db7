"""Experiment configuration and runners that emit CSV tables and JSON summaries."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .dmrg import exact_diagonalize, ground_state_dmrg
from .lcu import LcuDecomposition, lcu_decompose
from .molecular import FIXTURES, FcidumpError, MolecularIntegrals, load_fixture, molecular_hamiltonian, read_fcidump
from .mps import Mps, SizeGuardError, schmidt_spectrum, to_statevector
from .pauli import PauliSum, expectation, haf_chain
from .qct import (
    ExcitationPool,
    OrbitalSplit,
    build_gucc_pool,
    build_qct_pool,
    count_guccsd_parameters,
    count_qct_parameters,
)
from .seq import BasisPolicy, SeqPlan, prepared_state, seq_prepare
from .vqe import dmrg_active_reference, vqe_minimize

SCHEMA_VERSION = 1
THREADS_ENV = "DMRGQCT_NUM_THREADS"
MAX_DENSE_ENERGY_SITES = 20
MAX_SCHMIDT_SITES = 16
MAX_ED_REFERENCE = 14

EXPERIMENTS = ("prep-compare", "schmidt-trace", "param-scaling", "vqe", "dmrg", "decompose")

CONFIG_SCHEMA: dict = {
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["haf", "fcidump"]},
                "n": {"type": "integer", "minimum": 2},
                "fixture": {"enum": list(FIXTURES)},
                "path": {"type": "string"},
                "split": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 3, "maxItems": 3},
            },
            "required": ["kind"],
        },
        "target_d": {"type": "integer", "minimum": 1},
        "layers": {"type": "integer", "minimum": 1},
        "n_terms": {"type": "integer", "minimum": 1},
        "d_max": {"type": ["integer", "null"], "minimum": 1},
        "algorithm": {"enum": ["seq", "lcu"]},
        "projected": {"type": "boolean"},
        "lcu_phase": {"enum": ["optimal", "target"]},
        "seed": {"type": "integer", "minimum": 0},
        "basis_policy": {"enum": ["qr", "random"]},
        "sweeps": {"type": "integer", "minimum": 1},
        "pool": {"enum": ["qct", "gucc", "none"]},
        "doubles": {"type": "boolean"},
        "reference_d_max": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "penalty": {"type": "number", "minimum": 0},
        "budget": {"type": "integer", "minimum": 1},
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "splits": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 3, "maxItems": 3},
            "minItems": 1,
        },
        "output": {"type": "string"},
    },
}

DEFAULTS: dict[str, Any] = {
    "target_d": 16,
    "layers": 32,
    "d_max": None,
    "algorithm": "lcu",
    "projected": True,
    "lcu_phase": "optimal",
    "seed": 0,
    "basis_policy": "qr",
    "sweeps": 20,
    "pool": "qct",
    "doubles": True,
    "reference_d_max": [1, 2, 4],
    "penalty": 1.0,
    "budget": 50000,
    "sizes": [8, 16, 32, 64, 128],
    "splits": [[0.05, 0.15, 0.8], [0.1, 0.8, 0.1], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    model: dict = field(default_factory=dict)
    target_d: int = 16
    layers: int = 32
    n_terms: int | None = None
    d_max: int | None = None
    algorithm: str = "lcu"
    projected: bool = True
    lcu_phase: str = "optimal"
    seed: int = 0
    basis_policy: str = "qr"
    sweeps: int = 20
    pool: str = "qct"
    doubles: bool = True
    reference_d_max: list[int] = field(default_factory=lambda: [1, 2, 4])
    penalty: float = 1.0
    budget: int = 50000
    sizes: list[int] = field(default_factory=lambda: list(DEFAULTS["sizes"]))
    splits: list[list[float]] = field(default_factory=lambda: [list(s) for s in DEFAULTS["splits"]])
    output: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> ExperimentConfig:
        try:
            jsonschema.validate(obj, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise ConfigError(f"config field {where}: {exc.message}") from None
        merged = {**DEFAULTS, **obj}
        cfg = cls(**merged)
        cfg._check()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict({**obj, **(overrides or {})})

    def _check(self) -> None:
        needs_model = self.experiment != "param-scaling"
        if needs_model and not self.model:
            raise ConfigError(f"{self.experiment} needs a model")
        kind = self.model.get("kind")
        if kind == "haf" and "n" not in self.model:
            raise ConfigError("haf model needs n")
        if kind == "fcidump" and not ("fixture" in self.model) ^ ("path" in self.model):
            raise ConfigError("fcidump model needs exactly one of fixture or path")
        if self.experiment == "vqe" and kind != "fcidump":
            raise ConfigError("vqe needs a molecular (fcidump) model")
        if self.experiment == "vqe" and "split" not in self.model:
            raise ConfigError("vqe needs an orbital split")

    @property
    def effective_d_max(self) -> int:
        return self.d_max if self.d_max is not None else 3 * self.target_d

    @property
    def effective_terms(self) -> int:
        return self.n_terms if self.n_terms is not None else self.layers

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


# ---------------------------------------------------------------- models


@dataclass
class Model:
    hamiltonian: PauliSum
    label: str
    integrals: MolecularIntegrals | None = None
    split: OrbitalSplit | None = None


def build_model(cfg: ExperimentConfig) -> Model:
    m = cfg.model
    if m["kind"] == "haf":
        return Model(haf_chain(int(m["n"])), f"haf-{m['n']}")
    try:
        if "fixture" in m:
            ints, _ = load_fixture(m["fixture"])
            label = m["fixture"]
        else:
            ints = read_fcidump(m["path"])
            label = Path(m["path"]).stem
    except (OSError, FcidumpError, KeyError) as exc:
        raise ConfigError(f"cannot load molecular model: {exc}") from None
    split = None
    if "split" in m:
        c, a, v = m["split"]
        if c + a + v != ints.n_orbitals:
            raise ConfigError(f"split {m['split']} does not cover {ints.n_orbitals} orbitals")
        split = OrbitalSplit.for_electrons(c, a, v, ints.n_electrons)
        if not 0 <= split.n_electrons_active <= 2 * a:
            raise ConfigError(f"split {m['split']} leaves {split.n_electrons_active} active electrons")
    return Model(molecular_hamiltonian(ints), label, ints, split)


@dataclass
class Target:
    state: Mps
    energy: float  # DMRG energy of the target state
    reference_energy: float  # exact (or best available) ground energy
    reference_method: str


def ground_target(model: Model, cfg: ExperimentConfig) -> Target:
    h = model.hamiltonian
    res = ground_state_dmrg(h, cfg.target_d, cfg.sweeps, seed=cfg.seed)
    if h.n <= MAX_ED_REFERENCE:
        e0, _ = exact_diagonalize(h)
        method = "exact diagonalization"
    else:
        ref = ground_state_dmrg(h, max(4 * cfg.target_d, 64), cfg.sweeps, seed=cfg.seed)
        e0, method = min(ref.energy, res.energy), f"DMRG d_max={max(4 * cfg.target_d, 64)}"
    return Target(res.state, res.energy, e0, method)


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def worker_map(fn: Callable, items: Sequence) -> list:
    """``[fn(x) for x in items]`` on a thread pool sized by the environment; order is kept."""
    n = worker_count()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- tables


@dataclass
class Table:
    schema: str
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {self.schema} v{SCHEMA_VERSION}\n")
        buf.write(f"# version: {__version__}\n")
        for k, v in self.meta.items():
            buf.write(f"# {k}: {v if isinstance(v, str) else json.dumps(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def read_csv(text: str) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of ``Table.to_csv`` (values stay strings)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            meta[key.strip()] = val.strip()
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    return {"seed": cfg.seed, "config": cfg.to_dict(), **extra}


def _energy(h: PauliSum, state: Mps | np.ndarray) -> float:
    if isinstance(state, Mps) and state.n_sites <= MAX_DENSE_ENERGY_SITES:
        state = to_statevector(state)
    return expectation(h, state)


def _prepared_states(plan: SeqPlan, dec: LcuDecomposition) -> tuple[list, list]:
    """States prepared by the first ``k`` SEQ layers and LCU terms, for every ``k``.

    Dense vectors up to ``MAX_DENSE_ENERGY_SITES`` sites, untruncated MPS beyond.
    """
    n = plan.n_sites
    if n > MAX_DENSE_ENERGY_SITES:
        seq = [prepared_state(plan, k) for k in range(1, len(plan.layers) + 1)]
        return seq, [dec.prepared_state(k) for k in range(1, dec.n_terms + 1)]
    zero = np.zeros(1 << n, dtype=complex)
    zero[0] = 1.0
    seq = []
    for k in range(1, len(plan.layers) + 1):
        v = zero
        for layer in reversed(plan.layers[:k]):
            v = layer.apply_dense(v)
        seq.append(v)
    terms = [layer.apply_dense(zero) for layer in dec.layers]
    acc = np.zeros_like(zero)
    lcu = []
    for kappa, r in zip(dec.kappas, terms):
        acc = acc + kappa * r
        lcu.append(acc / np.linalg.norm(acc))
    return seq, lcu


# ---------------------------------------------------------------- runners


def run_prep_compare(cfg: ExperimentConfig) -> Table:
    """Fidelity and energy error of SEQ and LCU against the number of layers."""
    model = build_model(cfg)
    target = ground_target(model, cfg)
    d_max = cfg.effective_d_max
    policy = BasisPolicy(cfg.basis_policy, cfg.seed)
    plan = seq_prepare(target.state, cfg.layers, d_max, policy)
    dec = lcu_decompose(target.state, cfg.layers, d_max, projected=cfg.projected, policy=policy,
                        phase=cfg.lcu_phase)
    h = model.hamiltonian
    seq_states, lcu_states = _prepared_states(plan, dec)
    rows = []
    for k in range(1, cfg.layers + 1):
        kl = min(k, dec.n_terms)
        rows.append([
            k, plan.fidelity_trace[k - 1], dec.exact_fidelity_trace[kl - 1],
            _energy(h, seq_states[k - 1]) - target.reference_energy,
            _energy(h, lcu_states[kl - 1]) - target.reference_energy, kl,
        ])
    return Table(
        "prep-compare",
        ["layers", "seq_fidelity", "lcu_fidelity", "seq_energy_error", "lcu_energy_error", "lcu_terms"],
        rows,
        _meta(cfg, model=model.label, d_max=d_max, target_energy=target.energy,
              reference_energy=target.reference_energy, reference_method=target.reference_method,
              lcu_stalled=dec.stalled, lcu_terminated_early=dec.terminated_early),
    )


def run_schmidt_trace(cfg: ExperimentConfig) -> Table:
    """Untruncated bond dimensions and middle-cut Schmidt values per iteration."""
    model = build_model(cfg)
    n = model.hamiltonian.n
    if n > MAX_SCHMIDT_SITES:
        raise SizeGuardError(f"schmidt-trace runs untruncated and is limited to {MAX_SCHMIDT_SITES} sites")
    target = ground_target(model, cfg)
    cap = 2 ** (n // 2)
    cut = n // 2 - 1
    policy = BasisPolicy(cfg.basis_policy, cfg.seed)
    plan = seq_prepare(target.state, cfg.layers, cap, policy)
    dec = lcu_decompose(target.state, cfg.layers, None, projected=cfg.projected, policy=policy,
                        phase=cfg.lcu_phase)
    rows = []
    for i in range(cfg.layers):
        st = prepared_state(plan, i + 1)
        rows.append(["seq", i, st.max_bond, _spectrum(st, cut), plan.fidelity_trace[i]])
    for i in range(dec.n_terms):
        st = dec.prepared_state(i + 1)
        rows.append(["lcu", i, st.max_bond, _spectrum(st, cut), dec.exact_fidelity_trace[i]])
    return Table(
        "schmidt-trace",
        ["algorithm", "iteration", "max_bond", "schmidt_values", "fidelity"],
        rows,
        _meta(cfg, model=model.label, cut=cut, bond_cap=cap),
    )


def _spectrum(state: Mps, cut: int) -> str:
    return ";".join(f"{s:.12g}" for s in schmidt_spectrum(state, cut).values)


def split_from_fractions(n: int, fractions: Sequence[float]) -> OrbitalSplit:
    """Round core and active counts, giving the remainder to the virtual space."""
    fc, fa, fv = fractions
    total = fc + fa + fv
    c = int(round(n * fc / total))
    a = min(int(round(n * fa / total)), n - c)
    return OrbitalSplit(c, a, n - c - a)


def run_param_scaling(cfg: ExperimentConfig) -> Table:
    """Parameter counts of the generalized and canonical-transformation pools."""
    items = [(n, tuple(f)) for n in cfg.sizes for f in cfg.splits]

    def row(item):
        n, fr = item
        sp = split_from_fractions(n, fr)
        gs, gd = count_guccsd_parameters(n) if n >= 2 else (0, 0)
        qs, qd = count_qct_parameters(sp, True)
        qcts, _ = count_qct_parameters(sp, False)
        gucc = gs + gd
        return [n, "/".join(f"{x:g}" for x in fr), sp.n_core, sp.n_active, sp.n_virtual,
                gucc, qs + qd, qcts, (qs + qd) / gucc if gucc else float("nan")]

    rows = worker_map(row, items)
    return Table(
        "param-scaling",
        ["n", "split", "n_core", "n_active", "n_virtual", "guccsd_count", "qctsd_count", "qcts_count", "ratio"],
        rows,
        _meta(cfg),
    )


def _pool_for(cfg: ExperimentConfig, split: OrbitalSplit) -> ExcitationPool:
    if cfg.pool == "none":
        return ExcitationPool([], split.n_qubits)
    if cfg.pool == "gucc":
        return build_gucc_pool(split.n_orbitals, cfg.doubles)
    return build_qct_pool(split, cfg.doubles)


@dataclass
class VqeRun:
    trace: Table
    summary: dict


def run_vqe(cfg: ExperimentConfig) -> VqeRun:
    """DMRG active-space reference followed by VQE, for each reference ``d_max``."""
    model = build_model(cfg)
    h, split = model.hamiltonian, model.split
    if h.n > MAX_ED_REFERENCE:
        raise SizeGuardError(f"vqe runs on dense vectors and is limited to {MAX_ED_REFERENCE} qubits")
    e_exact, _ = exact_diagonalize(h)
    pool = _pool_for(cfg, split)

    def one(d: int):
        ref = dmrg_active_reference(h, split, d, penalty=cfg.penalty, sweeps=cfg.sweeps, seed=cfg.seed)
        res = vqe_minimize(h, pool, ref.state, budget=cfg.budget)
        return d, ref, res

    runs = worker_map(one, list(cfg.reference_d_max))
    rows, results = [], []
    for d, ref, res in runs:
        for it, e, g in res.iterations or [(0, res.energy, float("nan"))]:
            rows.append([d, it, e, e - e_exact, g])
        results.append({
            "reference_d_max": d,
            "reference_energy": ref.active_energy,
            "reference_error": ref.active_energy - e_exact,
            "final_energy": res.energy,
            "final_error": res.energy - e_exact,
            "n_evaluations": len(res.evaluations),
            "budget_exhausted": res.budget_exhausted,
            "converged": res.converged,
        })
    summary = {
        "schema": f"vqe-summary v{SCHEMA_VERSION}",
        "model": model.label,
        "split": [split.n_core, split.n_active, split.n_virtual],
        "pool": cfg.pool,
        "pool_size": len(pool),
        "exact_energy": e_exact,
        "seed": cfg.seed,
        "runs": results,
    }
    table = Table("vqe-trace", ["reference_d_max", "iteration", "energy", "energy_error", "gradient_norm"],
                  rows, _meta(cfg, model=model.label, exact_energy=e_exact, pool_size=len(pool)))
    return VqeRun(table, summary)


def run_dmrg(cfg: ExperimentConfig) -> dict:
    model = build_model(cfg)
    h = model.hamiltonian
    res = ground_state_dmrg(h, cfg.target_d, cfg.sweeps, seed=cfg.seed)
    out = {
        "schema": f"dmrg-summary v{SCHEMA_VERSION}",
        "model": model.label,
        "d_max": cfg.target_d,
        "energy": res.energy,
        "sweep_energies": res.sweep_energies,
        "converged": res.converged,
        "delta": res.delta,
        "bond_dims": res.state.bond_dims,
        "seed": cfg.seed,
    }
    if h.n <= MAX_ED_REFERENCE:
        e0, _ = exact_diagonalize(h)
        out["exact_energy"] = e0
        out["error"] = res.energy - e0
    return out


def run_decompose(cfg: ExperimentConfig) -> SeqPlan | LcuDecomposition:
    model = build_model(cfg)
    target = ground_target(model, cfg)
    policy = BasisPolicy(cfg.basis_policy, cfg.seed)
    if cfg.algorithm == "seq":
        return seq_prepare(target.state, cfg.layers, cfg.effective_d_max, policy)
    return lcu_decompose(target.state, cfg.effective_terms, cfg.effective_d_max,
                         projected=cfg.projected, policy=policy, phase=cfg.lcu_phase)


def load_plan(text: str) -> SeqPlan | LcuDecomposition:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"plan is not valid JSON: {exc}") from None
    kind = obj.get("kind")
    if kind == "seq":
        return SeqPlan.from_dict(obj)
    if kind == "lcu":
        return LcuDecomposition.from_dict(obj)
    raise ConfigError(f"unknown plan kind {kind!r}")
