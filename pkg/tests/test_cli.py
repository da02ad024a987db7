from __future__ import annotations

import json

import numpy as np
import pytest

from dmrgqct.cli import EXIT_CONFIG, EXIT_GUARD, main
from dmrgqct.dmrg import exact_diagonalize
from dmrgqct.experiments import (
    ConfigError,
    ExperimentConfig,
    read_csv,
    run_param_scaling,
    run_prep_compare,
    run_schmidt_trace,
    run_vqe,
    split_from_fractions,
    worker_count,
)
from dmrgqct.mps import to_statevector
from dmrgqct.pauli import expectation, haf_chain
from dmrgqct.seq import prepared_state, seq_prepare
from dmrgqct.dmrg import ground_state_dmrg

GOLDEN_COLUMNS = {
    "prep-compare": "layers,seq_fidelity,lcu_fidelity,seq_energy_error,lcu_energy_error,lcu_terms",
    "schmidt-trace": "algorithm,iteration,max_bond,schmidt_values,fidelity",
    "param-scaling": "n,split,n_core,n_active,n_virtual,guccsd_count,qctsd_count,qcts_count,ratio",
    "vqe-trace": "reference_d_max,iteration,energy,energy_error,gradient_norm",
}


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def column(rows, header, name, kind=float):
    k = header.index(name)
    return [kind(r[k]) for r in rows]


@pytest.mark.parametrize("argv,schema", [
    (["prep-compare", "--haf", "4", "--layers", "2", "--target-d", "2"], "prep-compare"),
    (["schmidt-trace", "--haf", "6", "--layers", "2", "--target-d", "2"], "schmidt-trace"),
    (["param-scaling", "--sizes", "8"], "param-scaling"),
    (["vqe", "--fixture", "h2_sto3g", "--split", "0,1,1", "--pool", "gucc", "--reference-d-max", "1"], "vqe-trace"),
])
def test_golden_headers(capsys, argv, schema):
    code, out, _ = run_cli(capsys, *argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# schema: {schema} v1"
    assert lines[1].startswith("# version: ")
    assert lines[2] == "# seed: 0"
    assert lines[3].startswith("# config: ")
    header = next(line for line in lines if not line.startswith("#"))
    assert header == GOLDEN_COLUMNS[schema]


def test_runs_are_reproducible(capsys):
    argv = ["prep-compare", "--haf", "6", "--layers", "3", "--target-d", "4", "--seed", "5"]
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second
    assert "# seed: 5" in first


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "param-scaling", "sizes": [8, 10], "splits": [[0, 0, 1]]}))
    _, out, _ = run_cli(capsys, "param-scaling", "--config", str(cfg), "--sizes", "12")
    _, header, rows = read_csv(out)
    assert column(rows, header, "n", int) == [12]


def test_output_file(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, out, _ = run_cli(capsys, "param-scaling", "--sizes", "6", "-o", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("# schema: param-scaling v1")


@pytest.mark.parametrize("argv", [
    ["prep-compare"],  # no model
    ["vqe", "--haf", "4"],  # vqe needs a molecular model
    ["vqe", "--fixture", "h2_sto3g"],  # and a split
    ["vqe", "--fixture", "h2_sto3g", "--split", "1,1,1"],  # split does not cover the orbitals
    ["prep-compare", "--haf", "4", "--layers", "0"],  # schema violation
    ["prep-compare", "--config", "/nonexistent.json"],
    ["cost", "/nonexistent-plan.json"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == EXIT_CONFIG
    assert "config error" in err


def test_size_guard_exits_3(capsys):
    code, _, err = run_cli(capsys, "schmidt-trace", "--haf", "18", "--layers", "2")
    assert code == EXIT_GUARD
    assert "size guard" in err


def test_decompose_then_cost(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    for algorithm in ("seq", "lcu"):
        code, _, _ = run_cli(capsys, "decompose", "--haf", "6", "--algorithm", algorithm,
                             "--layers", "3", "--target-d", "4", "-o", str(plan))
        assert code == 0
        code, out, _ = run_cli(capsys, "cost", str(plan))
        report = json.loads(out)
        assert code == 0 and report["cnot_count"] > 0
    assert 0 < report["success_probability"] <= 1


def test_dmrg_command(capsys):
    code, out, _ = run_cli(capsys, "dmrg", "--haf", "8", "--d-max", "16")
    summary = json.loads(out)
    assert code == 0 and abs(summary["error"]) < 1e-8


# ---------------------------------------------------------------- runner semantics


def test_prep_compare_d2_target_is_exact():
    cfg = ExperimentConfig.from_dict({"experiment": "prep-compare", "model": {"kind": "haf", "n": 6},
                                      "layers": 1, "target_d": 2})
    t = run_prep_compare(cfg)
    assert t.rows[0][1] >= 1 - 1e-9 and t.rows[0][2] >= 1 - 1e-9


def test_prep_compare_energy_errors_match_dense_oracle():
    cfg = ExperimentConfig.from_dict({"experiment": "prep-compare", "model": {"kind": "haf", "n": 10},
                                      "layers": 4, "target_d": 4})
    t = run_prep_compare(cfg)
    h = haf_chain(10)
    e0, _ = exact_diagonalize(h)
    target = ground_state_dmrg(h, 4, 20, seed=0).state
    plan = seq_prepare(target, 4, 12)
    for k, row in enumerate(t.rows, start=1):
        want = expectation(h, to_statevector(prepared_state(plan, k))) - e0
        assert abs(row[3] - want) < 1e-8


def test_schmidt_trace_contrast():
    cfg = ExperimentConfig.from_dict({"experiment": "schmidt-trace", "model": {"kind": "haf", "n": 10},
                                      "layers": 5, "target_d": 4})
    t = run_schmidt_trace(cfg)
    seq = [r for r in t.rows if r[0] == "seq"]
    lcu = [r for r in t.rows if r[0] == "lcu"]
    assert seq[0][3] == lcu[0][3]
    for i, r in enumerate(lcu):
        assert r[2] <= min(2 * i + 2, 32)
    assert all(r[2] <= min(2 ** (i + 1), 32) for i, r in enumerate(seq))


def test_param_scaling_limits():
    cfg = ExperimentConfig.from_dict({"experiment": "param-scaling", "sizes": [20],
                                      "splits": [[0, 1, 0], [0, 0, 1]]})
    t = run_param_scaling(cfg)
    all_active, no_active = t.rows
    assert all_active[6] == 0 and all_active[7] == 0
    assert no_active[6] == no_active[5]


def test_param_scaling_large_system_ratio():
    cfg = ExperimentConfig.from_dict({"experiment": "param-scaling", "sizes": [100],
                                      "splits": [[0.05, 0.15, 0.8]]})
    ratio = run_param_scaling(cfg).rows[0][-1]
    assert 0.05 < ratio < 0.2


def test_split_from_fractions_covers_all_orbitals():
    for n in (5, 8, 13):
        sp = split_from_fractions(n, (0.1, 0.8, 0.1))
        assert sp.n_orbitals == n


def test_vqe_empty_pool_error_equals_reference_error():
    cfg = ExperimentConfig.from_dict({"experiment": "vqe",
                                      "model": {"kind": "fcidump", "fixture": "h4_sto3g", "split": [1, 2, 1]},
                                      "pool": "none", "reference_d_max": [2]})
    run = run_vqe(cfg)
    r = run.summary["runs"][0]
    assert r["final_error"] == r["reference_error"]


def test_vqe_h2_gucc():
    cfg = ExperimentConfig.from_dict({"experiment": "vqe",
                                      "model": {"kind": "fcidump", "fixture": "h2_sto3g", "split": [0, 1, 1]},
                                      "pool": "gucc", "reference_d_max": [1]})
    assert abs(run_vqe(cfg).summary["runs"][0]["final_error"]) < 1e-6


def test_thread_environment(monkeypatch):
    monkeypatch.setenv("DMRGQCT_NUM_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("DMRGQCT_NUM_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count()


def test_threaded_runs_match_serial(monkeypatch):
    cfg = ExperimentConfig.from_dict({"experiment": "param-scaling", "sizes": [6, 9, 12]})
    serial = run_param_scaling(cfg).rows
    monkeypatch.setenv("DMRGQCT_NUM_THREADS", "4")
    assert run_param_scaling(cfg).rows == serial
    assert np.isfinite(serial[0][-1])
