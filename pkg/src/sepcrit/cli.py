"""Command line entry point: check, scan, witness, simulate."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import criteria as crit
from .experiment import joint_probabilities, mean_from_probs, shot_sample, signed_sum, signed_sum_sigma
from .scan import (
    FAMILY_ALIASES,
    PRESET_CRITERIA,
    CriterionSpec,
    ScanSpec,
    classify_point,
    emit_csv,
    emit_svg,
    family,
    load_unitary,
    preset,
    resolve_u,
    run_scan,
)
from .states import random_density, state_from_json
from .witness import TABLEAUX, build_witness, evaluate_witness

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VIOLATED = 0, 1, 2, 3


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    specs = [CriterionSpec.parse(c) for c in args.criteria.split(",") if c]
    if args.state:
        rho = state_from_json(Path(args.state).read_text())
        u = load_unitary(args.u_file) if args.u_file else None
        reports = [crit.evaluate(c.name, rho, c.alpha, c.side, u, args.tol) for c in specs]
    else:
        if not (args.family and args.params):
            raise SystemExit("check needs --state or --family with --params")
        name = FAMILY_ALIASES.get(args.family, args.family)
        fam = family(name)
        u = load_unitary(args.u_file) if args.u_file else resolve_u("default", name, fam.dims[0])
        row = classify_point(name, _floats(args.params), specs, u, args.tol)
        if not row.valid:
            print(json.dumps({"error": "parameters do not describe a state", "params": row.params}))
            return EXIT_RUNTIME
        reports = row.reports
    lines = "".join(r.to_json() + "\n" for r in reports)
    _emit(lines, args.out)
    return EXIT_OK if all(r.satisfied for r in reports) else EXIT_VIOLATED


def cmd_scan(args) -> int:
    if args.spec:
        spec = ScanSpec.from_json(Path(args.spec).read_text())
    elif args.preset:
        if args.preset not in PRESET_CRITERIA:
            raise SystemExit(f"unknown preset {args.preset}; known: {sorted(PRESET_CRITERIA)}")
        spec = preset(args.preset, args.slice, args.steps)
    else:
        raise SystemExit("scan needs --spec or --preset")
    if args.u_file:
        spec.u = args.u_file
    if args.tol is not None:
        spec.tol = args.tol
    scan = run_scan(spec, threads=args.threads)
    _emit(emit_csv(scan), args.out)
    if args.svg:
        emit_svg(scan, args.svg, args.svg_out or "scan.svg")
    return EXIT_OK


def cmd_witness(args) -> int:
    dims = tuple(_ints(args.dims))
    if args.tableau not in TABLEAUX:
        raise SystemExit(f"unknown tableau {args.tableau}; known: {sorted(TABLEAUX)}")
    u = load_unitary(args.u_file) if args.u_file else None
    tab = TABLEAUX[args.tableau](dims, args.alpha, args.side, u)
    w = build_witness(tab, dims)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.n_states):
        rho = random_density(dims, rng)
        worst = max(worst, abs(evaluate_witness(w, rho) - tab.scalar(rho)))
    print(json.dumps({"tableau": tab.source, "copies": w.copies, "matrix_dim": int(w.op.shape[0]), "states": args.n_states, "max_deviation": worst}))
    if args.out:
        Path(args.out).write_text(w.to_json())
    return EXIT_OK if worst <= 1e-9 else EXIT_RUNTIME


def cmd_simulate(args) -> int:
    rho = state_from_json(Path(args.state).read_text())
    if args.n is not None and len(rho.dims) != args.n:
        raise SystemExit(f"state has {len(rho.dims)} qubits, --n says {args.n}")
    table = joint_probabilities(rho)
    reflect = _ints(args.reflect) if args.reflect else []
    result = {"reflect": reflect, "signed_sum": signed_sum(table, reflect), "mean": mean_from_probs(table, reflect)}
    if args.shots:
        sampled = shot_sample(table, args.shots, args.seed)
        scale = 2 ** len(reflect)
        result.update(
            shots=args.shots,
            sampled_mean=mean_from_probs(sampled, reflect),
            sampled_sigma=scale * signed_sum_sigma(table, reflect, args.shots),
        )
        table = sampled
    print(json.dumps(result))
    if args.out:
        Path(args.out).write_text(table.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=crit.DEFAULT_TOL, help="base margin tolerance")
    common.add_argument("--u-file", help="JSON matrix {re, im} for the antisymmetric unitary")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="sepcrit", description="Separability criteria from the extended reduction map.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="evaluate criteria on one state")
    c.add_argument("--state", help="state JSON file")
    c.add_argument("--family", help="bell_diagonal, bell_mixture, divincenzo, so3_4x4 (or so3)")
    c.add_argument("--params", help="comma-separated family parameters")
    c.add_argument("--criteria", required=True, help="comma list of name[:alpha[:side]]")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("scan", parents=[common], help="grid scan to CSV (and optional SVG)")
    s.add_argument("--spec", help="ScanSpec JSON file")
    s.add_argument("--preset", help=f"one of {sorted(PRESET_CRITERIA)}")
    s.add_argument("--slice", type=float, default=0.0, help="p (fig3-7) or t3 (fig1) for presets")
    s.add_argument("--steps", type=int, default=400)
    s.add_argument("--svg", help="criterion label to draw")
    s.add_argument("--svg-out")
    s.set_defaults(func=cmd_scan)

    w = sub.add_parser("witness", parents=[common], help="build a multi-copy witness and check it")
    w.add_argument("--tableau", required=True)
    w.add_argument("--alpha", type=int, default=2)
    w.add_argument("--dims", default="2,2")
    w.add_argument("--side", default="A")
    w.add_argument("--n-states", type=int, default=100)
    w.set_defaults(func=cmd_witness)

    m = sub.add_parser("simulate", parents=[common], help="two-copy outcome statistics for an n-qubit state")
    m.add_argument("--state", required=True)
    m.add_argument("--n", type=int)
    m.add_argument("--reflect", default="", help="comma list of reflected qubits (1-based)")
    m.add_argument("--shots", type=int)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as e:
        if isinstance(e.code, str):
            print(e.code, file=sys.stderr)
            return EXIT_USAGE
        raise
    except Exception as e:  # runtime failure: report and signal
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
