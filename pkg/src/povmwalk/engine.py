"""Monte Carlo trajectory ensemble and the exact enumeration oracle.

A trajectory samples the full pipeline: choose a linearly independent POVM
leaf by its branch probability, convert it to a projective POVM, run the
simplex walk to a vertex, then relabel the vertex through the conditional
output table.  The oracle enumerates every outcome string of a fixed depth
with exact probabilities and serves as the reference the ensemble is checked
against.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NumericsError, ValidationError
from .povm import (
    PpovmPlan,
    Povm,
    born_probabilities,
    decompose_to_lipovms,
    to_ppovm,
    tree_leaves,
)
from .qubit_algebra import eigh2, require_hermitian
from .tolerances import DEFAULT_TOL
from .walk import WalkConfig, walk_arrays


@dataclass(frozen=True)
class StateSpec:
    """Input-state specification: a fixed ket, a density operator sampled as
    its eigen-ensemble, or Haar-random pure states (kind="haar")."""

    kind: str
    ket: np.ndarray | None = None
    rho: np.ndarray | None = None

    @staticmethod
    def pure(ket: np.ndarray) -> "StateSpec":
        ket = np.asarray(ket, dtype=complex)
        n = np.linalg.norm(ket)
        if ket.shape != (2,) or n < 1e-12:
            raise ValidationError("pure state must be a nonzero 2-vector")
        return StateSpec("pure", ket=ket / n)

    @staticmethod
    def mixed(rho: np.ndarray) -> "StateSpec":
        rho = require_hermitian(rho)
        if abs(rho[0, 0].real + rho[1, 1].real - 1.0) > 1e-10:
            raise ValidationError("density operator must have unit trace")
        if float(np.linalg.eigvalsh(rho)[0]) < -1e-10:
            raise ValidationError("density operator must be positive semidefinite")
        return StateSpec("mixed", rho=rho)

    @staticmethod
    def haar() -> "StateSpec":
        return StateSpec("haar")

    def density(self) -> np.ndarray:
        if self.kind == "pure":
            return np.outer(self.ket, self.ket.conj())
        if self.kind == "mixed":
            return np.asarray(self.rho, dtype=complex)
        return np.eye(2, dtype=complex) / 2.0

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "pure":
            return self.ket.copy()
        if self.kind == "mixed":
            pair = eigh2(self.rho)
            i = 0 if rng.random() < pair.values[0] else 1
            return pair.vectors[:, i].copy()
        z = rng.normal(size=4)
        ket = np.array([z[0] + 1j * z[1], z[2] + 1j * z[3]])
        return ket / np.linalg.norm(ket)


@dataclass(frozen=True)
class TrajectoryRecord:
    leaf_id: int
    outcomes: np.ndarray          # active-index outcome per step
    vertex: int                   # terminal vertex (active index), -1 if none
    output_label: object          # relabeled original outcome, None if not converged
    final_x: np.ndarray
    initial_state: np.ndarray
    final_state: np.ndarray
    steps: int
    log_prob: float
    converged: bool
    accumulated_op: np.ndarray
    step_probs: np.ndarray


@dataclass(frozen=True)
class OutcomeStatistics:
    labels: tuple
    counts: np.ndarray
    total: int
    frequencies: np.ndarray
    reference: np.ndarray
    stderr: np.ndarray
    mean_steps: float
    max_steps: int
    mean_final_fidelity: float    # |<0|psi_final>|^2 averaged over walks
    nonconverged: int


@dataclass(frozen=True)
class OracleReport:
    """Exact depth-N enumeration: probabilities and vertex classes are indexed
    by the base-m digits of the string (first outcome is the most significant
    digit)."""

    depth: int
    n_outcomes: int
    probabilities: np.ndarray
    vertex_class: np.ndarray      # argmax-x classification per string
    grouped: np.ndarray           # probability mass per nearest vertex
    total: float


def sample_step_outcome(state, plan, rng: np.random.Generator) -> int:
    """Draw one outcome index from the exact per-step distribution."""
    psi = state.system_state
    probs = np.einsum("kab,b,a->k", plan.targets, psi, psi.conj()).real
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise NumericsError(f"step probabilities sum to {total}")
    return int(np.searchsorted(np.cumsum(probs), rng.random() * total))


def _finish_record(
    plan: PpovmPlan,
    leaf_id: int,
    vertex: int,
    steps: int,
    log_prob: float,
    outcomes: np.ndarray,
    step_probs: np.ndarray,
    x: np.ndarray,
    psi0: np.ndarray,
    psi: np.ndarray,
    acc: np.ndarray,
    u_label: float,
) -> TrajectoryRecord:
    converged = vertex >= 0
    label = None
    if converged:
        full_k = int(plan.active[vertex])
        col = np.cumsum(plan.conditional[:, full_k])
        i = int(np.searchsorted(col, u_label * col[-1]))
        label = plan.labels[i]
    return TrajectoryRecord(
        leaf_id=leaf_id,
        outcomes=outcomes[:steps].copy(),
        vertex=vertex,
        output_label=label,
        final_x=x.copy(),
        initial_state=np.asarray(psi0, dtype=complex).copy(),
        final_state=psi.copy(),
        steps=steps,
        log_prob=log_prob,
        converged=converged,
        accumulated_op=acc.copy(),
        step_probs=step_probs[:steps].copy(),
    )


def _run_kernel(
    plan: PpovmPlan,
    arrays: tuple[np.ndarray, np.ndarray],
    psi0: np.ndarray,
    cfg: WalkConfig,
    uniforms: np.ndarray,
    leaf_id: int,
    u_label: float,
) -> TrajectoryRecord:
    q, V0 = arrays
    max_steps = uniforms.shape[0]
    m = q.shape[0]
    outcomes = np.empty(max_steps, dtype=np.int64)
    step_probs = np.empty(max_steps)
    x_out = np.empty(m)
    psi_out = np.empty(2, dtype=complex)
    acc_out = np.empty((2, 2), dtype=complex)
    vertex, steps, log_prob = _kernels.run_walk(
        q, V0, np.asarray(psi0, dtype=complex), cfg.phi, cfg.epsilon_vertex,
        max_steps, uniforms, outcomes, step_probs, x_out, psi_out, acc_out,
    )
    return _finish_record(
        plan, leaf_id, int(vertex), int(steps), float(log_prob),
        outcomes, step_probs, x_out, psi0, psi_out, acc_out, u_label,
    )


def run_trajectory(
    plan: PpovmPlan,
    psi0: np.ndarray,
    cfg: WalkConfig,
    rng: np.random.Generator,
    leaf_id: int = 0,
) -> TrajectoryRecord:
    """Run one full walk plus conditional relabeling for a single plan."""
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValidationError("initial state is not normalized")
    if plan.trivial or len(plan.active) < 2:
        # nothing to measure: output drawn straight from the conditional column
        u_label = rng.random()
        vertex = 0 if len(plan.active) >= 1 else -1
        return _finish_record(
            plan, leaf_id, vertex, 0, 0.0,
            np.empty(0, dtype=np.int64), np.empty(0),
            np.ones(1), psi0, psi0, np.eye(2, dtype=complex), u_label,
        )
    max_steps = cfg.resolved_max_steps()
    uniforms = rng.random(max_steps)
    u_label = rng.random()
    return _run_kernel(plan, walk_arrays(plan), psi0, cfg, uniforms, leaf_id, u_label)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    z_scores: np.ndarray


def compare_statistics(stats: OutcomeStatistics, z_max: float = 3.0) -> Verdict:
    """Per-label z-scores of the empirical frequencies against the reference."""
    if stats.total < 100:
        raise ValidationError("need at least 100 trajectories to compare statistics")
    se = np.where(stats.stderr > 0.0, stats.stderr, 1.0 / stats.total)
    z = (stats.frequencies - stats.reference) / se
    return Verdict(bool(np.all(np.abs(z) <= z_max)), z)


def destructiveness_metric(record: TrajectoryRecord) -> float:
    """Final-state infidelity to |0>."""
    return float(abs(record.final_state[1]) ** 2)


def run_pipeline(
    povm: Povm,
    state: StateSpec,
    cfg: WalkConfig,
    seed: int,
    trajectories: int,
    keep_records: bool = False,
) -> tuple[OutcomeStatistics, list[TrajectoryRecord]]:
    """Sample the full ensemble and aggregate per-label statistics.

    Each trajectory uses its own counter-based stream (keyed by seed and
    trajectory index), so results are reproducible regardless of scheduling.
    """
    if trajectories < 1:
        raise ValidationError("need at least one trajectory")
    tree = decompose_to_lipovms(povm, cfg.tol)
    leaves = tree_leaves(tree)
    plans = [to_ppovm(leaf, cfg.tol) for leaf, _ in leaves]
    leaf_probs = np.array([p for _, p in leaves])
    leaf_cum = np.cumsum(leaf_probs)
    arrays = [walk_arrays(plan) if not plan.trivial and len(plan.active) >= 2 else None
              for plan in plans]
    max_steps = cfg.resolved_max_steps()

    def one(idx: int) -> TrajectoryRecord:
        rng = np.random.Generator(np.random.Philox(key=[seed, idx]))
        leaf_id = int(np.searchsorted(leaf_cum, rng.random() * leaf_cum[-1]))
        plan = plans[leaf_id]
        psi0 = state.sample(rng)
        if arrays[leaf_id] is None:
            u_label = rng.random()
            vertex = 0 if len(plan.active) >= 1 else -1
            return _finish_record(
                plan, leaf_id, vertex, 0, 0.0,
                np.empty(0, dtype=np.int64), np.empty(0),
                np.ones(1), psi0, psi0, np.eye(2, dtype=complex), u_label,
            )
        uniforms = rng.random(max_steps)
        u_label = rng.random()
        return _run_kernel(plan, arrays[leaf_id], psi0, cfg, uniforms, leaf_id, u_label)

    n_threads = int(os.environ.get("POVMWALK_THREADS", "1"))
    records: list[TrajectoryRecord]
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            records = list(pool.map(one, range(trajectories)))
    else:
        records = [one(i) for i in range(trajectories)]

    labels = povm.labels
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros(len(labels), dtype=np.int64)
    steps_sum = 0
    steps_max = 0
    fid_sum = 0.0
    walks = 0
    nonconverged = 0
    for rec in records:
        if not rec.converged:
            nonconverged += 1
            continue
        counts[index[rec.output_label]] += 1
        if rec.steps > 0:
            steps_sum += rec.steps
            steps_max = max(steps_max, rec.steps)
            fid_sum += 1.0 - destructiveness_metric(rec)
            walks += 1
    total_ok = trajectories - nonconverged
    freqs = counts / total_ok if total_ok > 0 else np.zeros(len(labels))
    reference = born_probabilities(povm, state.density(), cfg.tol)
    stderr = np.sqrt(np.clip(reference * (1.0 - reference), 0.0, None) / max(total_ok, 1))
    stats = OutcomeStatistics(
        labels=labels,
        counts=counts,
        total=total_ok,
        frequencies=freqs,
        reference=reference,
        stderr=stderr,
        mean_steps=steps_sum / walks if walks else 0.0,
        max_steps=steps_max,
        mean_final_fidelity=fid_sum / walks if walks else 1.0,
        nonconverged=nonconverged,
    )
    return stats, (records if keep_records else [])


def oracle_enumerate(
    plan: PpovmPlan, psi0: np.ndarray, cfg: WalkConfig, depth: int
) -> OracleReport:
    """Exact probabilities of every length-``depth`` outcome string.

    Walks the outcome tree depth-first, carrying the conditional step
    probabilities and the unnormalized accumulated operator; the product of
    conditionals is cross-checked against the accumulated-operator probability
    for every string.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValidationError("initial state is not normalized")
    q, V0 = walk_arrays(plan)
    m = q.shape[0]
    if m < 2:
        raise ValidationError("oracle needs at least two projective elements")
    n_strings = m ** depth
    if n_strings > 10**6:
        raise ValidationError(
            f"{m}^{depth} = {n_strings} strings exceeds the enumeration guard (1e6)"
        )
    probabilities = np.empty(n_strings)
    vertex_class = np.empty(n_strings, dtype=np.int64)
    x0 = np.full(m, 1.0 / m)
    acc0 = np.array([1.0 + 0j, 0.0 + 0j, 1.0 + 0j])
    counter = 0

    def visit(level: int, x: np.ndarray, acc: np.ndarray, psi: np.ndarray, prob: float) -> None:
        nonlocal counter
        if level == depth:
            a00, a01, a11 = acc
            w0 = a00 * psi0[0] + a01 * psi0[1]
            w1 = a11 * psi0[1]
            exact = float(abs(w0) ** 2 + abs(w1) ** 2)
            if abs(prob - exact) > 1e-12:
                raise NumericsError(
                    f"string probability mismatch: product {prob} vs operator {exact}"
                )
            probabilities[counter] = prob
            vertex_class[counter] = int(np.argmax(x))
            counter += 1
            return
        probs, next_x, next_acc, next_psi = _kernels.oracle_children(
            x, acc[0], acc[1], acc[2], psi[0], psi[1], q, V0, cfg.phi
        )
        for k in range(m):
            visit(level + 1, next_x[k], next_acc[k], next_psi[k], prob * probs[k])

    visit(0, x0, acc0, psi0, 1.0)
    total = float(probabilities.sum())
    if abs(total - 1.0) > 1e-12:
        raise NumericsError(f"oracle total probability {total} is not 1")
    grouped = np.zeros(m)
    np.add.at(grouped, vertex_class, probabilities)
    return OracleReport(
        depth=depth,
        n_outcomes=m,
        probabilities=probabilities,
        vertex_class=vertex_class,
        grouped=grouped,
        total=total,
    )


def oracle_string(report: OracleReport, index: int) -> tuple[int, ...]:
    """Outcome digits of string ``index`` (first outcome most significant)."""
    digits = []
    for _ in range(report.depth):
        digits.append(index % report.n_outcomes)
        index //= report.n_outcomes
    return tuple(reversed(digits))
