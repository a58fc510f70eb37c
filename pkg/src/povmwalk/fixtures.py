"""Canonical POVMs and random generators used by tests and examples."""

from __future__ import annotations

import numpy as np

from .povm import Povm, validate_povm
from .qubit_algebra import ID2, pauli_compose


def trine_povm() -> Povm:
    """Three-outcome symmetric POVM with coplanar Bloch vectors at 120 degrees.

    Elements are (2/3) |psi_k><psi_k| with Bloch vectors in the x-y plane and
    the first one along +x.
    """
    elems = []
    for k in range(3):
        ang = 2.0 * np.pi * k / 3.0
        v = np.array([np.cos(ang), np.sin(ang), 0.0])
        elems.append(pauli_compose(1.0 / 3.0, v))
    return validate_povm(elems)


TETRA_AXES = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
) / np.sqrt(3.0)


def sic_povm() -> Povm:
    """Four-outcome tetrahedral POVM (1/4)(I + v_k . sigma)."""
    return validate_povm([pauli_compose(0.25, v) for v in TETRA_AXES])


def z_povm() -> Povm:
    """Projective measurement along z."""
    return validate_povm([pauli_compose(0.5, [0, 0, 1]), pauli_compose(0.5, [0, 0, -1])])


def plus_x_state() -> np.ndarray:
    return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def random_pure(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=4)
    ket = np.array([z[0] + 1j * z[1], z[2] + 1j * z[3]])
    return ket / np.linalg.norm(ket)


def random_density(rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return (G + G.conj().T) / 2.0


def random_povm(rng: np.random.Generator, n: int) -> Povm:
    """Random n-outcome POVM: conjugate random positive operators by the
    inverse square root of their sum."""
    ops = []
    for _ in range(n):
        G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ops.append(G @ G.conj().T)
    S = sum(ops)
    vals, vecs = np.linalg.eigh(S)
    S_inv_half = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
    return validate_povm([S_inv_half @ E @ S_inv_half for E in ops])


def random_lippovm(rng: np.random.Generator, n: int) -> Povm:
    """Random linearly independent projective POVM with n in {2, 3, 4}.

    Draws random rank-1 directions until the normalized set is valid and
    linearly independent.
    """
    from .povm import find_dependence

    if not 2 <= n <= 4:
        raise ValueError("n must be 2, 3, or 4")
    while True:
        kets = [random_pure(rng) for _ in range(n)]
        ops = [np.outer(k, k.conj()) for k in kets]
        S = sum(ops)
        vals, vecs = np.linalg.eigh(S)
        if vals[0] < 1e-6:
            continue
        S_inv_half = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
        elems = [S_inv_half @ E @ S_inv_half for E in ops]
        # conjugation keeps every element rank 1, so the result is projective
        povm = validate_povm(elems)
        if find_dependence(povm) is None:
            return povm
