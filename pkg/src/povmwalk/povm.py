"""POVM validation, splitting into linearly independent sets, and the
projective conversion with its conditional output table.

A POVM with linearly dependent elements can be realized by classically
choosing between two smaller POVMs; repeating the split yields a binary tree
whose leaves are linearly independent POVMs with at most four outcomes.  Any
POVM can further be traded for a projective POVM followed by a classical
relabeling step p(i|k).  Both reductions preserve the Born-rule outcome
distribution exactly, which is what the invariant checks here enforce.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import NumericsError, ValidationError
from .qubit_algebra import ID2, eigh2, pauli_decompose, require_hermitian
from .tolerances import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class Povm:
    """A validated POVM: elements stacked as an (n, 2, 2) array plus labels."""

    elements: np.ndarray
    labels: tuple

    def __len__(self) -> int:
        return self.elements.shape[0]


def validate_povm(
    elements: Sequence[np.ndarray],
    labels: Sequence | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> Povm:
    """Check positivity and completeness; raise with the offending element."""
    if len(elements) < 1:
        raise ValidationError("a POVM needs at least one element")
    stack = np.empty((len(elements), 2, 2), dtype=complex)
    for i, E in enumerate(elements):
        try:
            stack[i] = require_hermitian(E, tol)
        except ValidationError as exc:
            raise ValidationError(f"element {i}: {exc}") from exc
        lam_min = float(np.linalg.eigvalsh(stack[i])[0])
        if lam_min < -tol.psd:
            raise ValidationError(
                f"element {i} is not positive semidefinite (eigenvalue {lam_min:.3e})"
            )
    residual = float(np.max(np.abs(stack.sum(axis=0) - ID2)))
    if residual > tol.completeness:
        raise ValidationError(f"elements do not sum to identity (residual {residual:.3e})")
    if labels is None:
        labels = tuple(range(1, len(elements) + 1))
    else:
        if len(labels) != len(elements):
            raise ValidationError("labels length does not match element count")
        labels = tuple(labels)
    return Povm(stack, labels)


def _pauli_coordinates(E: np.ndarray) -> np.ndarray:
    """Coordinates of a Hermitian 2x2 matrix in the real basis (I/2-part, sigma)."""
    return np.array(
        [
            (E[0, 0].real + E[1, 1].real) / 2.0,
            (E[0, 1].real + E[1, 0].real) / 2.0,
            (E[1, 0].imag - E[0, 1].imag) / 2.0,
            (E[0, 0].real - E[1, 1].real) / 2.0,
        ]
    )


@dataclass(frozen=True)
class DependenceWitness:
    """Coefficients c with sum_i c_i E_i = 0, sorted descending.

    `order[j]` is the original element index sitting at sorted position j.
    Normalized so max |c_i| = 1; the sign is fixed so c[0] > 0.
    """

    c: np.ndarray
    order: np.ndarray

    def residual(self, povm: Povm) -> float:
        combo = np.tensordot(self.c, povm.elements[self.order], axes=1)
        return float(np.max(np.abs(combo)))


def find_dependence(
    povm: Povm, tol: Tolerances = DEFAULT_TOL
) -> DependenceWitness | None:
    """Return a linear-dependence witness, or None for an independent set.

    The elements are viewed as vectors in the 4-dimensional real space of
    Hermitian 2x2 matrices; the witness is the right-singular vector of the
    coefficient matrix belonging to its smallest singular value.
    """
    coords = np.stack([_pauli_coordinates(E) for E in povm.elements], axis=1)
    _, svals, vt = np.linalg.svd(coords)
    n = len(povm)
    if n <= 4:
        smallest = svals[n - 1] if n - 1 < len(svals) else 0.0
        if smallest >= tol.dependence_rel * svals[0]:
            return None
    c = vt[-1] if n > 4 else vt[n - 1]
    c = c / np.max(np.abs(c))
    if np.max(c) <= 0.0:
        c = -c
    order = np.argsort(-c, kind="stable")
    c = c[order]
    if not (c[0] > 0.0 and c[-1] < 0.0):
        raise NumericsError(
            "dependence witness lacks mixed signs; POVM contains degenerate elements"
        )
    return DependenceWitness(c, order)


def split_once(
    povm: Povm,
    witness: DependenceWitness,
    tol: Tolerances = DEFAULT_TOL,
) -> tuple[Povm, float, Povm, float]:
    """Split an n-outcome POVM into two (n-1)-outcome POVMs.

    With sorted coefficients c_1 >= ... >= c_n, branch A keeps elements
    ((c_1 - c_j)/c_1) E_j for j >= 2 and branch B keeps ((c_n - c_j)/c_n) E_j
    for j <= n-1; exact-zero elements are dropped.  Branch probabilities are
    P_A = c_1/(c_1 - c_n) and P_B = -c_n/(c_1 - c_n).
    """
    c = witness.c
    order = witness.order
    scale = float(np.max(np.abs(povm.elements)))
    if witness.residual(povm) > 1e-8 * max(scale, 1.0):
        raise ValidationError("dependence witness is inconsistent with the POVM")
    sorted_elems = povm.elements[order]
    sorted_labels = [povm.labels[i] for i in order]
    n = len(povm)

    def build(coeffs: np.ndarray, keep: range) -> Povm:
        elems, labels = [], []
        for j in keep:
            if coeffs[j] <= 1e-12:
                continue
            elems.append(coeffs[j] * sorted_elems[j])
            labels.append(sorted_labels[j])
        return validate_povm(elems, labels, tol)

    coeff_a = (c[0] - c) / c[0]
    coeff_b = (c[-1] - c) / c[-1]
    povm_a = build(coeff_a, range(1, n))
    povm_b = build(coeff_b, range(0, n - 1))
    prob_a = float(c[0] / (c[0] - c[-1]))
    prob_b = float(-c[-1] / (c[0] - c[-1]))
    return povm_a, prob_a, povm_b, prob_b


@dataclass(frozen=True)
class LipovmLeaf:
    povm: Povm


@dataclass(frozen=True)
class LipovmBranch:
    witness: DependenceWitness
    prob_a: float
    child_a: "LipovmTree"
    prob_b: float
    child_b: "LipovmTree"


LipovmTree = Union[LipovmLeaf, LipovmBranch]


def decompose_to_lipovms(
    povm: Povm, tol: Tolerances = DEFAULT_TOL, _depth: int = 0
) -> LipovmTree:
    """Recursively split until every leaf POVM is linearly independent."""
    if _depth > 32:
        raise NumericsError("LIPOVM decomposition exceeded depth 32; splitting is not reducing")
    witness = find_dependence(povm, tol)
    if witness is None:
        return LipovmLeaf(povm)
    povm_a, prob_a, povm_b, prob_b = split_once(povm, witness, tol)
    return LipovmBranch(
        witness,
        prob_a,
        decompose_to_lipovms(povm_a, tol, _depth + 1),
        prob_b,
        decompose_to_lipovms(povm_b, tol, _depth + 1),
    )


def tree_leaves(tree: LipovmTree) -> list[tuple[Povm, float]]:
    """All leaves with their path probabilities, in left-to-right order."""
    out: list[tuple[Povm, float]] = []

    def walk(node: LipovmTree, prob: float) -> None:
        if isinstance(node, LipovmLeaf):
            out.append((node.povm, prob))
        else:
            walk(node.child_a, prob * node.prob_a)
            walk(node.child_b, prob * node.prob_b)

    walk(tree, 1.0)
    return out


@dataclass(frozen=True)
class PpovmPlan:
    """A projective POVM plus the conditional relabeling table.

    ``elements[i]`` is the rank-1 element ((a_i - b_i)/(1 - sum b)) |a_i><a_i|
    (the zero matrix when a_i = b_i).  ``conditional[i, k]`` is the
    probability of reporting label i after projective outcome k; every column
    sums to one.  ``active`` lists the indices of the nonzero elements, the
    only ones the measurement walk visits.
    """

    elements: np.ndarray
    conditional: np.ndarray
    eigen_large: np.ndarray
    eigen_small: np.ndarray
    principal_axes: np.ndarray
    active: np.ndarray
    labels: tuple

    @property
    def trivial(self) -> bool:
        return len(self.labels) == 1


def to_ppovm(povm: Povm, tol: Tolerances = DEFAULT_TOL) -> PpovmPlan:
    """Convert any valid POVM to a projective POVM with conditional outputs."""
    n = len(povm)
    if n == 1:
        # single-element POVM is {I}: nothing to measure, output is certain
        return PpovmPlan(
            elements=povm.elements.copy(),
            conditional=np.ones((1, 1)),
            eigen_large=np.array([1.0]),
            eigen_small=np.array([1.0]),
            principal_axes=np.array([[1.0 + 0j, 0.0 + 0j]]),
            active=np.array([0]),
            labels=povm.labels,
        )
    a = np.empty(n)
    b = np.empty(n)
    axes = np.empty((n, 2), dtype=complex)
    for i, E in enumerate(povm.elements):
        pair = eigh2(E, tol)
        a[i], b[i] = pair.values
        axes[i] = pair.vectors[:, 0]
    weight = 1.0 - b.sum()
    if weight <= 1e-12:
        raise ValidationError(
            "all elements proportional to identity; no projective conversion exists"
        )
    elements = np.empty((n, 2, 2), dtype=complex)
    for i in range(n):
        elements[i] = ((a[i] - b[i]) / weight) * np.outer(axes[i], axes[i].conj())
    conditional = np.tile(b[:, None], (1, n)) + weight * np.eye(n)
    col_residual = float(np.max(np.abs(conditional.sum(axis=0) - 1.0)))
    if col_residual > 1e-12:
        raise NumericsError(f"conditional columns do not sum to 1 ({col_residual:.3e})")
    # algebraic identity: sum(a - b) = 2 * (1 - sum b)
    if abs((a - b).sum() - 2.0 * weight) > 1e-10:
        raise NumericsError("eigenvalue sum identity violated; input is not a POVM")
    recon = np.einsum("ik,kab->iab", conditional, elements)
    recon_residual = float(np.max(np.abs(recon - povm.elements)))
    if recon_residual > tol.reconstruction:
        raise NumericsError(
            f"conditional reconstruction residual {recon_residual:.3e} exceeds tolerance"
        )
    active = np.flatnonzero(a - b > 1e-12)
    return PpovmPlan(elements, conditional, a, b, axes, active, povm.labels)


def born_probabilities(
    povm: Povm, rho: np.ndarray, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Reference outcome distribution Tr[E_i rho] for a density operator rho."""
    rho = require_hermitian(rho, tol)
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    if lam_min < -tol.psd:
        raise ValidationError(f"state is not positive semidefinite ({lam_min:.3e})")
    trace = float(rho[0, 0].real + rho[1, 1].real)
    if abs(trace - 1.0) > 1e-10:
        raise ValidationError(f"state trace is {trace}, expected 1")
    probs = np.einsum("iab,ba->i", povm.elements, rho).real
    if probs.min() < -1e-12:
        raise NumericsError(f"negative Born probability {probs.min():.3e}")
    if abs(probs.sum() - 1.0) > 1e-10:
        raise NumericsError(f"Born probabilities sum to {probs.sum()}")
    return probs
