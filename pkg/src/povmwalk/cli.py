"""Command-line front end.

Commands: validate, decompose, simulate, oracle.  Exit codes: 0 success,
1 validation failure, 2 statistical failure, 3 numerical-invariant failure.
Result JSON files are deterministic for a fixed seed and config; wall-clock
timing goes into a separate sidecar file so reruns stay byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .engine import (
    StateSpec,
    compare_statistics,
    oracle_enumerate,
    run_pipeline,
)
from .errors import PovmWalkError, ValidationError
from .io import (
    load_povm_file,
    load_state_file,
    plan_to_dict,
    povm_to_dict,
    report_to_dict,
    stats_to_dict,
    tree_to_dict,
    write_json,
)
from .povm import born_probabilities, decompose_to_lipovms, to_ppovm, tree_leaves, validate_povm
from .walk import WalkConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povmwalk",
        description=(
            "Simulate an arbitrary qubit POVM as a random walk of destructive "
            "weak measurements. Defaults: phi=0.1, eps=1e-3, traj=20000, seed=0. "
            "Density-matrix state files are sampled as the eigen-ensemble of rho. "
            "Set POVMWALK_THREADS to parallelize trajectories."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a POVM file and report its properties")
    p_val.add_argument("povm", type=Path)

    p_dec = sub.add_parser("decompose", help="emit the splitting tree and projective plans")
    p_dec.add_argument("povm", type=Path)
    p_dec.add_argument("--out", type=Path, default=None, help="output directory")

    p_sim = sub.add_parser("simulate", help="Monte Carlo ensemble against Born probabilities")
    p_sim.add_argument("povm", type=Path)
    p_sim.add_argument("--state", type=Path, required=True, help="state JSON file")
    p_sim.add_argument("--phi", type=float, default=0.1, help="weak-measurement angle (default 0.1)")
    p_sim.add_argument("--eps", type=float, default=1e-3, help="vertex tolerance (default 1e-3)")
    p_sim.add_argument("--max-steps", type=int, default=None, help="step cap per trajectory")
    p_sim.add_argument("--traj", type=int, default=20000, help="trajectory count (default 20000)")
    p_sim.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    p_sim.add_argument("--out", type=Path, default=None, help="output directory")
    p_sim.add_argument("--csv", action="store_true", help="also write per-trajectory CSV")

    p_ora = sub.add_parser("oracle", help="exact enumeration of short outcome strings")
    p_ora.add_argument("povm", type=Path)
    p_ora.add_argument("--state", type=Path, required=True, help="state JSON file (pure only)")
    p_ora.add_argument("--phi", type=float, default=0.1, help="weak-measurement angle (default 0.1)")
    p_ora.add_argument("--eps", type=float, default=1e-3, help="vertex tolerance (default 1e-3)")
    p_ora.add_argument("--depth", type=int, default=8, help="maximum string length (default 8)")
    p_ora.add_argument("--out", type=Path, default=None, help="output directory")
    return parser


def _config_echo(args) -> dict:
    echo = {"command": args.command, "povm": str(args.povm)}
    for key in ("state", "phi", "eps", "max_steps", "traj", "seed", "depth"):
        if hasattr(args, key):
            value = getattr(args, key)
            echo[key] = str(value) if isinstance(value, Path) else value
    return echo


def _emit(bundle: dict, out_dir: Path | None, elapsed: float) -> None:
    if out_dir is None:
        return
    write_json(out_dir / "result.json", bundle)
    write_json(out_dir / "timing.json", {"elapsed_seconds": elapsed})


def cmd_validate(args) -> int:
    povm = load_povm_file(args.povm)
    print(f"valid POVM with {len(povm)} elements, labels {list(povm.labels)}")
    for i, E in enumerate(povm.elements):
        vals = np.linalg.eigvalsh(E)
        print(f"  element {i} ({povm.labels[i]}): eigenvalues {vals[1]:.6f}, {vals[0]:.6f}")
    return 0


def cmd_decompose(args) -> int:
    start = time.perf_counter()
    povm = load_povm_file(args.povm)
    tree = decompose_to_lipovms(povm)
    leaves = tree_leaves(tree)
    plans = [to_ppovm(leaf) for leaf, _ in leaves]
    print(f"{len(leaves)} leaf POVM(s):")
    for i, ((leaf, prob), plan) in enumerate(zip(leaves, plans)):
        print(
            f"  leaf {i}: probability {prob:.6f}, {len(leaf)} outcomes, "
            f"{len(plan.active)} active projective elements"
        )
    bundle = {
        "config": _config_echo(args),
        "tree": tree_to_dict(tree),
        "leaves": [
            {"probability": prob, "povm": povm_to_dict(leaf), "plan": plan_to_dict(plan)}
            for (leaf, prob), plan in zip(leaves, plans)
        ],
        "invariants": {"leaf_sizes_at_most_4": all(len(leaf) <= 4 for leaf, _ in leaves)},
    }
    _emit(bundle, args.out, time.perf_counter() - start)
    return 0


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    povm = load_povm_file(args.povm)
    state = load_state_file(args.state)
    cfg = WalkConfig(phi=args.phi, epsilon_vertex=args.eps, max_steps=args.max_steps)
    keep = bool(args.csv and args.out)
    stats, records = run_pipeline(povm, state, cfg, args.seed, args.traj, keep_records=keep)
    verdict = compare_statistics(stats)
    print(f"{stats.total} converged trajectories ({stats.nonconverged} non-converged)")
    print(f"mean steps {stats.mean_steps:.1f}, max steps {stats.max_steps}")
    for i, lab in enumerate(stats.labels):
        print(
            f"  label {lab}: frequency {stats.frequencies[i]:.5f} "
            f"(Born {stats.reference[i]:.5f}, z = {verdict.z_scores[i]:+.2f})"
        )
    print("statistics:", "PASS" if verdict.passed else "FAIL")
    bundle = {
        "config": _config_echo(args),
        "statistics": stats_to_dict(stats),
        "z_scores": verdict.z_scores.tolist(),
        "invariants": {
            "statistics_pass": verdict.passed,
            "nonconverged_fraction": stats.nonconverged / args.traj,
        },
    }
    _emit(bundle, args.out, time.perf_counter() - start)
    if keep:
        with open(args.out / "trajectories.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trajectory", "leaf", "steps", "vertex", "output", "final_infidelity"])
            for t, rec in enumerate(records):
                writer.writerow(
                    [
                        t,
                        rec.leaf_id,
                        rec.steps,
                        rec.vertex,
                        rec.output_label,
                        repr(float(abs(rec.final_state[1]) ** 2)),
                    ]
                )
    return 0 if verdict.passed else 2


def cmd_oracle(args) -> int:
    start = time.perf_counter()
    povm = load_povm_file(args.povm)
    state = load_state_file(args.state)
    if state.kind != "pure":
        raise ValidationError("oracle requires a pure state file")
    cfg = WalkConfig(phi=args.phi, epsilon_vertex=args.eps)
    tree = decompose_to_lipovms(povm)
    leaves = tree_leaves(tree)
    if len(leaves) != 1:
        raise ValidationError("oracle requires a linearly independent POVM (single leaf)")
    plan = to_ppovm(leaves[0][0])
    active = plan.active
    active_povm = validate_povm(
        list(plan.elements[active]), [plan.labels[i] for i in active]
    )
    rho = state.density()
    reference = born_probabilities(active_povm, rho)
    rows = []
    reports = []
    for depth in range(1, args.depth + 1):
        report = oracle_enumerate(plan, state.ket, cfg, depth)
        tv = 0.5 * float(np.sum(np.abs(report.grouped - reference)))
        rows.append((depth, tv, report.total))
        reports.append(report)
        print(f"depth {depth:2d}: total {report.total:.14f}, TV to Born {tv:.5f}")
    bundle = {
        "config": _config_echo(args),
        "reference": reference.tolist(),
        "reports": [report_to_dict(r) for r in reports],
        "tv_distance": [{"depth": d, "tv": tv} for d, tv, _ in rows],
        "invariants": {
            "totals_are_one": all(abs(t - 1.0) <= 1e-12 for _, _, t in rows),
        },
    }
    _emit(bundle, args.out, time.perf_counter() - start)
    if args.out is not None:
        with open(args.out / "tv_vs_depth.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["depth", "tv_distance", "total_probability"])
            for d, tv, total in rows:
                writer.writerow([d, repr(tv), repr(total)])
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "decompose": cmd_decompose,
        "simulate": cmd_simulate,
        "oracle": cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PovmWalkError as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
