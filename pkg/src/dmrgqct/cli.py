"""Command-line entry point: ``dmrgqct <subcommand> [--config FILE] [flags]``.

Exit codes: 0 success, 2 configuration error, 3 numerical size guard.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .circuits import cost_report
from .experiments import (
    ConfigError,
    ExperimentConfig,
    load_plan,
    run_decompose,
    run_dmrg,
    run_param_scaling,
    run_prep_compare,
    run_schmidt_trace,
    run_vqe,
)
from .lcu import LcuDecomposition, assemble_lcu_circuit, success_probability
from .mps import SizeGuardError
from .seq import assemble_seq_circuit

EXIT_CONFIG = 2
EXIT_GUARD = 3

log = logging.getLogger("dmrgqct")


def _csv_list(kind):
    def parse(text: str):
        try:
            return [kind(x) for x in text.split(",") if x]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}") from None
    return parse


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--haf", type=int, metavar="N", help="open Heisenberg chain on N sites")
    g.add_argument("--fixture", help="bundled FCIDUMP fixture (h2_sto3g, h4_sto3g)")
    g.add_argument("--fcidump", metavar="PATH", help="FCIDUMP file")
    g.add_argument("--split", type=_csv_list(int), metavar="C,A,V", help="core,active,virtual spatial orbitals")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON experiment config; flags override it")
    p.add_argument("--output", "-o", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmrgqct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep-compare", help="SEQ vs LCU fidelity and energy error per layer (CSV)")
    _common(p)
    _model_flags(p)
    p.add_argument("--layers", type=int)
    p.add_argument("--target-d", type=int)
    p.add_argument("--d-max", type=int)
    p.add_argument("--basis-policy", choices=["qr", "random"])
    p.add_argument("--lcu-phase", choices=["optimal", "target"], help="phase rule for LCU residuals")

    p = sub.add_parser("schmidt-trace", help="untruncated bond growth and Schmidt values (CSV)")
    _common(p)
    _model_flags(p)
    p.add_argument("--layers", type=int)
    p.add_argument("--target-d", type=int)
    p.add_argument("--lcu-phase", choices=["optimal", "target"], help="phase rule for LCU residuals")

    p = sub.add_parser("param-scaling", help="pool sizes against system size (CSV)")
    _common(p)
    p.add_argument("--sizes", type=_csv_list(int), metavar="N1,N2,...")

    p = sub.add_parser("vqe", help="DMRG reference plus VQE (CSV trace, JSON summary)")
    _common(p)
    _model_flags(p)
    p.add_argument("--pool", choices=["qct", "gucc", "none"])
    p.add_argument("--no-doubles", action="store_true")
    p.add_argument("--reference-d-max", type=_csv_list(int), metavar="D1,D2,...")
    p.add_argument("--budget", type=int)
    p.add_argument("--summary", metavar="PATH", help="JSON summary file (default: stderr)")

    p = sub.add_parser("dmrg", help="DMRG ground state (JSON)")
    _common(p)
    _model_flags(p)
    p.add_argument("--d-max", type=int, dest="target_d")
    p.add_argument("--sweeps", type=int)

    p = sub.add_parser("decompose", help="emit a SEQ or LCU plan file (JSON)")
    _common(p)
    _model_flags(p)
    p.add_argument("--algorithm", choices=["seq", "lcu"])
    p.add_argument("--layers", type=int)
    p.add_argument("--n-terms", type=int)
    p.add_argument("--target-d", type=int)
    p.add_argument("--d-max", type=int)
    p.add_argument("--unprojected", action="store_true", help="LCU residual without projection")
    p.add_argument("--lcu-phase", choices=["optimal", "target"], help="phase rule for LCU residuals")
    p.add_argument("--basis-policy", choices=["qr", "random"])

    p = sub.add_parser("cost", help="cost report of a plan file (JSON)")
    p.add_argument("plan", help="plan JSON written by decompose")
    p.add_argument("--layers", type=int, help="use only the first LAYERS layers or terms")
    p.add_argument("--generic", action="store_true", help="price two-qubit blocks as generic unitaries")
    p.add_argument("--opaque-controls", action="store_true", help="count controlled blocks as single gates")
    p.add_argument("--output", "-o", metavar="PATH")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_FLAG_KEYS = ("layers", "target_d", "d_max", "basis_policy", "seed", "sizes", "pool", "budget",
              "reference_d_max", "sweeps", "algorithm", "n_terms", "lcu_phase", "output")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
    base["experiment"] = args.command
    model = dict(base.get("model", {}))
    if getattr(args, "haf", None) is not None:
        model = {"kind": "haf", "n": args.haf}
    if getattr(args, "fixture", None):
        model = {"kind": "fcidump", "fixture": args.fixture, **({"split": model["split"]} if "split" in model else {})}
    if getattr(args, "fcidump", None):
        model = {"kind": "fcidump", "path": args.fcidump, **({"split": model["split"]} if "split" in model else {})}
    if getattr(args, "split", None) is not None:
        model["split"] = args.split
    if model:
        base["model"] = model
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if getattr(args, "no_doubles", False):
        base["doubles"] = False
    if getattr(args, "unprojected", False):
        base["projected"] = False
    return ExperimentConfig.from_dict(base)


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _run(args: argparse.Namespace) -> None:
    if args.command == "cost":
        try:
            plan = load_plan(Path(args.plan).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read plan {args.plan}: {exc}") from None
        iso = not args.generic
        if isinstance(plan, LcuDecomposition):
            if args.layers:
                plan = plan.truncated(args.layers)
            circuit = assemble_lcu_circuit(plan, isometric=iso)
            extra = {"success_probability": success_probability(plan), "n_terms": plan.n_terms}
        else:
            circuit = assemble_seq_circuit(plan, args.layers, isometric=iso)
            extra = {"n_layers": args.layers or len(plan.layers)}
        report = cost_report(circuit, expand_controls=not args.opaque_controls)
        out = {**report.to_dict(), **extra, "n_system": circuit.n_system,
               "n_ancilla": circuit.n_ancilla, "n_work": circuit.n_work}
        _write(json.dumps(out, indent=2) + "\n", args.output)
        return
    cfg = config_from_args(args)
    if args.command == "prep-compare":
        _write(run_prep_compare(cfg).to_csv(), cfg.output)
    elif args.command == "schmidt-trace":
        _write(run_schmidt_trace(cfg).to_csv(), cfg.output)
    elif args.command == "param-scaling":
        _write(run_param_scaling(cfg).to_csv(), cfg.output)
    elif args.command == "vqe":
        run = run_vqe(cfg)
        _write(run.trace.to_csv(), cfg.output)
        summary = json.dumps(run.summary, indent=2) + "\n"
        if args.summary:
            Path(args.summary).write_text(summary)
        else:
            sys.stderr.write(summary)
    elif args.command == "dmrg":
        _write(json.dumps(run_dmrg(cfg), indent=2) + "\n", cfg.output)
    elif args.command == "decompose":
        _write(run_decompose(cfg).dumps() + "\n", cfg.output)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    return 0


if __name__ == "__main__":
    sys.exit(main())
