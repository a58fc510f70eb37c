"""JSON (de)serialization for POVMs, states, and result artifacts.

Complex numbers are written as explicit [re, im] pairs; 2x2 matrices are
row-major nested lists of such pairs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .engine import OracleReport, OutcomeStatistics, StateSpec
from .errors import ValidationError
from .povm import LipovmBranch, LipovmLeaf, LipovmTree, Povm, PpovmPlan, validate_povm
from .tolerances import DEFAULT_TOL, Tolerances


def encode_complex(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def decode_complex(pair) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ValidationError(f"expected a [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def encode_matrix(M: np.ndarray) -> list:
    M = np.asarray(M)
    return [[encode_complex(M[i, j]) for j in range(M.shape[1])] for i in range(M.shape[0])]


def decode_matrix(rows) -> np.ndarray:
    try:
        return np.array([[decode_complex(z) for z in row] for row in rows], dtype=complex)
    except (TypeError, ValidationError) as exc:
        raise ValidationError(f"malformed matrix: {exc}") from exc


def encode_vector(v: np.ndarray) -> list:
    return [encode_complex(z) for z in np.asarray(v)]


def decode_vector(items) -> np.ndarray:
    return np.array([decode_complex(z) for z in items], dtype=complex)


def load_povm_file(path, tol: Tolerances = DEFAULT_TOL) -> Povm:
    """Load and validate a POVM from {"elements": [...], "labels": [...]}."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or "elements" not in data:
        raise ValidationError(f"{path}: expected an object with an 'elements' key")
    elements = []
    for i, rows in enumerate(data["elements"]):
        try:
            M = decode_matrix(rows)
        except ValidationError as exc:
            raise ValidationError(f"{path}: element {i}: {exc}") from exc
        if M.shape != (2, 2):
            raise ValidationError(f"{path}: element {i} has shape {M.shape}, expected 2x2")
        elements.append(M)
    labels = data.get("labels")
    if labels is not None:
        labels = tuple(labels)
    return validate_povm(elements, labels, tol)


def load_state_file(path) -> StateSpec:
    """Load a state: {"pure": [pair, pair]} or {"rho": matrix} or {"haar": true}."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if data.get("haar"):
        return StateSpec.haar()
    if "pure" in data:
        return StateSpec.pure(decode_vector(data["pure"]))
    if "rho" in data:
        return StateSpec.mixed(decode_matrix(data["rho"]))
    raise ValidationError(f"{path}: expected a 'pure', 'rho', or 'haar' key")


def povm_to_dict(povm: Povm) -> dict:
    return {
        "elements": [encode_matrix(E) for E in povm.elements],
        "labels": list(povm.labels),
    }


def tree_to_dict(tree: LipovmTree) -> dict:
    if isinstance(tree, LipovmLeaf):
        return {"leaf": povm_to_dict(tree.povm)}
    return {
        "witness": [float(c) for c in tree.witness.c],
        "order": [int(i) for i in tree.witness.order],
        "prob_a": tree.prob_a,
        "child_a": tree_to_dict(tree.child_a),
        "prob_b": tree.prob_b,
        "child_b": tree_to_dict(tree.child_b),
    }


def plan_to_dict(plan: PpovmPlan) -> dict:
    return {
        "elements": [encode_matrix(E) for E in plan.elements],
        "conditional": plan.conditional.tolist(),
        "eigen_large": plan.eigen_large.tolist(),
        "eigen_small": plan.eigen_small.tolist(),
        "principal_axes": [encode_vector(a) for a in plan.principal_axes],
        "active": plan.active.tolist(),
        "labels": list(plan.labels),
    }


def stats_to_dict(stats: OutcomeStatistics) -> dict:
    return {
        "labels": list(stats.labels),
        "counts": stats.counts.tolist(),
        "total": stats.total,
        "frequencies": stats.frequencies.tolist(),
        "reference": stats.reference.tolist(),
        "stderr": stats.stderr.tolist(),
        "mean_steps": stats.mean_steps,
        "max_steps": stats.max_steps,
        "mean_final_fidelity": stats.mean_final_fidelity,
        "nonconverged": stats.nonconverged,
    }


def report_to_dict(report: OracleReport, full_strings: bool = False) -> dict:
    out = {
        "depth": report.depth,
        "n_outcomes": report.n_outcomes,
        "grouped": report.grouped.tolist(),
        "total": report.total,
    }
    if full_strings:
        out["probabilities"] = report.probabilities.tolist()
        out["vertex_class"] = report.vertex_class.tolist()
    return out


def write_json(path, obj: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
