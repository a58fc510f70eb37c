"""Exact-semantics linear algebra for 2x2 complex operators.

Everything a qubit measurement needs: Pauli/Bloch decomposition, closed-form
eigendecomposition, the inverse square root of a positive operator, and polar
decomposition.  All functions are pure and operate on plain numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularOperatorError, ValidationError
from .tolerances import DEFAULT_TOL, Tolerances

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class BlochForm:
    """Representation of a Hermitian operator as q * (I + v . sigma)."""

    q: float
    v: np.ndarray

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.v))


@dataclass(frozen=True)
class EigenPair2:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def require_hermitian(H: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H.view(float))):
        raise ValidationError("matrix has non-finite entries")
    residual = float(np.max(np.abs(H - H.conj().T)))
    if residual > tol.hermitian:
        raise ValidationError(f"matrix is not Hermitian (residual {residual:.3e})")
    return H


def pauli_decompose(H: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> BlochForm:
    """Decompose a Hermitian matrix into q and the Bloch vector v.

    For Tr H > 0 this is H = q (I + v . sigma) with q = Tr H / 2.  A traceless
    input returns q = 0 together with the raw coefficient vector of the
    traceless part.
    """
    H = require_hermitian(H, tol)
    q = float(H[0, 0].real + H[1, 1].real) / 2.0
    w = np.array(
        [H[0, 1].real + H[1, 0].real, H[1, 0].imag - H[0, 1].imag, H[0, 0].real - H[1, 1].real]
    ) / 2.0
    # treat a vanishing (or subnormal) trace as the traceless case so the
    # division cannot overflow
    if abs(q) < 1e-200:
        return BlochForm(0.0, w)
    return BlochForm(q, w / q)


def pauli_compose(q: float, v: np.ndarray) -> np.ndarray:
    """Build q * (I + v . sigma) as an explicit Hermitian matrix."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [q * (1.0 + v[2]), q * (v[0] - 1.0j * v[1])],
            [q * (v[0] + 1.0j * v[1]), q * (1.0 - v[2])],
        ],
        dtype=complex,
    )


def eigh2(H: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> EigenPair2:
    """Eigendecomposition with values sorted descending.

    A degenerate spectrum returns the computational basis, which keeps the
    output deterministic.  Eigenvector phases are fixed so the largest
    component is real and non-negative.
    """
    H = require_hermitian(H, tol)
    b = pauli_decompose(H, tol)
    radius = abs(b.q) * np.linalg.norm(b.v) if b.q != 0.0 else np.linalg.norm(b.v)
    scale = max(abs(b.q), radius, 1.0)
    if radius <= 1e-14 * scale:
        trace_half = float(H[0, 0].real + H[1, 1].real) / 2.0
        return EigenPair2(np.array([trace_half, trace_half]), ID2.copy())
    values, vectors = np.linalg.eigh(H)
    order = np.argsort(values)[::-1]
    values = values[order].astype(float)
    vectors = vectors[:, order]
    for j in range(2):
        col = vectors[:, j]
        lead = col[np.argmax(np.abs(col))]
        vectors[:, j] = col * (lead.conj() / abs(lead))
    return EigenPair2(values, vectors)


def inv_sqrt_bloch_coeff(r_sq: float) -> float:
    """Coefficient b of the closed-form inverse square root (I - b v.sigma).

    Uses the series expansion near r = 0 where the exact expression is 0/0.
    """
    if r_sq < 1e-12:
        return 0.5 + r_sq / 8.0
    return (1.0 - math.sqrt(1.0 - r_sq)) / r_sq


def inv_sqrt_psd(E: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Inverse square root of a positive-definite 2x2 operator, closed form."""
    b = pauli_decompose(E, tol)
    radius = b.radius
    lam_min = b.q * (1.0 - radius)
    lam_max = b.q * (1.0 + radius)
    if lam_min <= tol.singular:
        raise SingularOperatorError(
            f"operator is not positive definite (smallest eigenvalue {lam_min:.3e})"
        )
    coeff = inv_sqrt_bloch_coeff(radius * radius)
    # scale matches the large-eigenvalue direction: scale * (1 - coeff*|v|) = lam_max^-1/2
    scale = 1.0 / (math.sqrt(lam_max) * (1.0 - coeff * radius))
    return scale * (ID2 - coeff * _dot_sigma(b.v))


def _dot_sigma(w: np.ndarray) -> np.ndarray:
    return np.array(
        [[w[2], w[0] - 1.0j * w[1]], [w[0] + 1.0j * w[1], -w[2]]], dtype=complex
    )


def polar_unitary(M: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Unitary factor U of the polar decomposition M = U P, P positive definite."""
    M = np.asarray(M, dtype=complex)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= tol.det_singular:
        raise SingularOperatorError(
            f"matrix is singular (|det| = {abs(det):.3e}); polar factor undefined"
        )
    U = M @ inv_sqrt_psd(M.conj().T @ M, tol)
    residual = float(np.max(np.abs(U.conj().T @ U - ID2)))
    if residual > tol.unitarity:
        raise SingularOperatorError(f"polar factor failed unitarity check ({residual:.3e})")
    return U


def is_psd(H: np.ndarray, tol: float) -> bool:
    """True iff the smallest eigenvalue of H is >= -tol."""
    H = require_hermitian(H)
    return bool(np.linalg.eigvalsh(H)[0] >= -tol)
