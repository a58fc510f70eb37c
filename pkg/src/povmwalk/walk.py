"""Random walk of a projective POVM measurement through the probability simplex.

Each step performs a weak measurement whose outcomes displace the mixture
Bloch vector toward the vertices of the image polytope; the displacement
lengths are pinned by the destructive measurement model and the weights by
the completeness conditions.  The walk terminates when the simplex position
is within epsilon of a vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import (
    ConstraintError,
    GeometryError,
    NumericsError,
    SingularOperatorError,
    ValidationError,
)
from .povm import PpovmPlan, Povm, find_dependence, validate_povm
from .qubit_algebra import (
    ID2,
    BlochForm,
    eigh2,
    inv_sqrt_bloch_coeff,
    pauli_compose,
    pauli_decompose,
    polar_unitary,
)
from .tolerances import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class WalkConfig:
    phi: float = 0.1
    epsilon_vertex: float = 1e-3
    max_steps: int | None = None
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not (0.0 < self.phi < math.pi / 4):
            raise ValidationError(f"phi must lie in (0, pi/4), got {self.phi}")
        if not (0.0 < self.epsilon_vertex < 0.1):
            raise ValidationError(
                f"epsilon_vertex must lie in (0, 0.1), got {self.epsilon_vertex}"
            )
        if self.max_steps is not None and self.max_steps < 1:
            raise ValidationError("max_steps must be at least 1")

    def resolved_max_steps(self) -> int:
        """Explicit cap, or 20x the vertex-approach rate estimate."""
        if self.max_steps is not None:
            return self.max_steps
        rate = 2.0 * math.log(1.0 / math.cos(self.phi))
        return 20 * math.ceil(math.log(1.0 / self.epsilon_vertex) / rate)


@dataclass(frozen=True)
class SimplexMap:
    """Bijection data between the simplex and its Bloch-ball image polytope.

    q holds the half-trace weights (all positive, summing to one) and the
    columns of V are the element Bloch vectors; q spans the kernel of V.
    """

    q: np.ndarray
    V: np.ndarray


def make_simplex_map(elems: list[BlochForm], tol: Tolerances = DEFAULT_TOL) -> SimplexMap:
    q = np.array([e.q for e in elems])
    V = np.stack([e.v for e in elems], axis=1)
    n = len(elems)
    if np.any(q <= 0.0):
        raise ValidationError("all half-trace weights must be positive")
    if abs(q.sum() - 1.0) > 1e-10:
        raise ValidationError(f"half-trace weights sum to {q.sum()}, expected 1")
    if float(np.max(np.abs(V @ q))) > 1e-10:
        raise ValidationError("weighted Bloch vectors do not sum to zero")
    svals = np.linalg.svd(V, compute_uv=False)
    rank = int(np.sum(svals > tol.dependence_rel * svals[0]))
    if rank != n - 1:
        raise ValidationError(f"Bloch-vector matrix has rank {rank}, expected {n - 1}")
    return SimplexMap(q, V)


def simplex_to_bloch(smap: SimplexMap, x: np.ndarray) -> np.ndarray:
    """Mixture Bloch vector of the simplex point x."""
    x = np.asarray(x, dtype=float)
    xq = smap.q * x
    return smap.V @ (xq / xq.sum())


def bloch_to_simplex(smap: SimplexMap, r: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Unique simplex preimage of a point r inside the image polytope."""
    n = smap.q.shape[0]
    aug = np.vstack([smap.V, np.ones((1, n))])
    rhs = np.concatenate([np.asarray(r, dtype=float), [1.0]])
    bary, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    if float(np.max(np.abs(aug @ bary - rhs))) > tol.simplex:
        raise GeometryError("point is not in the image polytope (inconsistent system)")
    if bary.min() < -1e-9:
        raise GeometryError(
            f"point lies outside the image polytope (barycentric coordinate {bary.min():.3e})"
        )
    bary = np.clip(bary, 0.0, None)
    y = bary / smap.q
    return y / y.sum()


@dataclass(frozen=True)
class WalkState:
    """One trajectory's state: simplex position, accumulated operator and its
    unitary polar factor, the conditioned system state, and the per-element
    Bloch data in the current (rotated) frame."""

    x: np.ndarray
    accumulated_op: np.ndarray
    unitary: np.ndarray
    system_state: np.ndarray
    steps: int
    elements: np.ndarray     # active projective elements, initial frame
    q: np.ndarray            # half-trace weights (frame independent)
    axes: np.ndarray         # current-frame Bloch vectors, columns (3, m)


@dataclass(frozen=True)
class StepPlan:
    """Everything needed to execute one weak measurement from a WalkState."""

    directions: np.ndarray        # (m, 3) unit displacement directions
    lengths: np.ndarray           # (m,) solved displacement lengths
    weights: np.ndarray           # (m,) positive constants c_k
    next_positions: np.ndarray    # (m, m) simplex position after each outcome
    targets: np.ndarray           # (m, 2, 2) target operators M_k^dag M_k
    operators: np.ndarray         # (m, 2, 2) destructive measurement operators
    ancilla_weights: np.ndarray   # (m,) scalars s_k
    ancilla_states: np.ndarray    # (m, 2) ancilla kets |e_k>
    r: np.ndarray                 # shared mixture Bloch vector
    b: float                      # shared inverse-square-root coefficient


def effective_elements(unitary: np.ndarray, elements: np.ndarray) -> list[BlochForm]:
    """Bloch forms of U E_i U^dag; weights and radii are conjugation invariant."""
    Ud = unitary.conj().T
    return [pauli_decompose(unitary @ E @ Ud) for E in elements]


def mixture_bloch(
    x: np.ndarray, elems: list[BlochForm], tol: Tolerances = DEFAULT_TOL
) -> tuple[np.ndarray, float]:
    """Bloch vector of the normalized mixture sum_i x_i E_i and its b coefficient."""
    q = np.array([e.q for e in elems])
    V = np.stack([e.v for e in elems], axis=1)
    xq = x * q
    r = V @ (xq / xq.sum())
    rn_sq = float(r @ r)
    if rn_sq >= (1.0 - tol.degenerate_radius) ** 2:
        raise GeometryError(
            f"mixture Bloch vector has length {math.sqrt(rn_sq):.12f}; walk should have terminated"
        )
    return r, inv_sqrt_bloch_coeff(rn_sq)


def solve_step_length(r: np.ndarray, direction: np.ndarray, phi: float) -> float:
    """Displacement length compatible with the destructive model (closed form)."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(direction, dtype=float)
    un = np.linalg.norm(u)
    if un == 0.0:
        raise ValidationError("direction must be nonzero")
    u = u / un
    rn = float(np.linalg.norm(r))
    if rn >= 1.0:
        raise ValidationError("mixture Bloch vector must lie strictly inside the ball")
    return float(_kernels.step_length(r[0], r[1], r[2], rn, u[0], u[1], u[2], phi))


def target_element(r: np.ndarray, b: float, dr: np.ndarray, c: float) -> np.ndarray:
    """Target positive operator of one outcome from its Bloch displacement."""
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    rk = r + dr
    iden = c * (1.0 - float(r @ rk))
    bloch = c * (b * float(r @ dr) * r + (1.0 / b - 1.0) * dr)
    T = iden * ID2 + np.array(
        [[bloch[2], bloch[0] - 1.0j * bloch[1]], [bloch[0] + 1.0j * bloch[1], -bloch[2]]]
    )
    lam_min = float(np.linalg.eigvalsh(T)[0])
    if lam_min < -1e-12:
        raise NumericsError(f"target operator has negative eigenvalue {lam_min:.3e}")
    return T


def reconstruct_operator(
    T: np.ndarray, phi: float, tol: Tolerances = DEFAULT_TOL
) -> tuple[np.ndarray, float, np.ndarray]:
    """Recover (M, s, |e>) of the destructive model from a target T = M^dag M."""
    T = np.asarray(T, dtype=complex)
    t00 = float(T[0, 0].real)
    t11 = float(T[1, 1].real)
    t01 = complex(T[0, 1])
    scale = max(abs(t00), abs(t11), abs(t01), 1e-30)
    if scale <= 1e-30:
        raise ValidationError("target operator is zero")
    cos_sq = math.cos(phi) ** 2
    residual = abs(abs(t01) ** 2 - t00 * (t11 - t00 * cos_sq))
    if residual > tol.model_consistency * scale * scale:
        raise ConstraintError(
            f"target violates the destructive-model entry constraint (residual {residual:.3e})"
        )
    s, gamma, delta, m00, m01, m11 = _kernels.reconstruct(t00, t01, t11, phi)
    # rounding in the target entries is amplified by 1/sin^2(phi) in s
    s_slack = max(1e-8, 1e-10 / math.sin(phi) ** 2)
    if not (0.0 < s <= 1.0 + s_slack):
        raise NumericsError(f"ancilla weight s = {s} outside (0, 1]")
    M = np.array([[m00, m01], [0.0, m11]], dtype=complex)
    match = float(np.max(np.abs(M.conj().T @ M - T)))
    if match > tol.operator_match * max(scale, 1.0):
        raise NumericsError(f"reconstructed operator mismatch {match:.3e}")
    e = np.array([gamma, np.conj(delta)], dtype=complex)  # ket with <e|0> = gamma
    return M, float(s), e


def init_walk(plan: PpovmPlan, psi0: np.ndarray, cfg: WalkConfig) -> WalkState:
    """Start a walk at the simplex center for the plan's active elements."""
    active = plan.active
    m = len(active)
    if m > 4:
        raise ValidationError(f"{m} projective elements; decompose the POVM first")
    if m < 2:
        raise ValidationError("walk needs at least two projective elements")
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValidationError("initial state is not normalized")
    elements = plan.elements[active]
    forms = [pauli_decompose(E) for E in elements]
    for i, f in enumerate(forms):
        if abs(f.radius - 1.0) > 1e-8:
            raise ValidationError(f"active element {i} is not proportional to a projector")
    if find_dependence(validate_povm(elements, tuple(range(m)))) is not None:
        raise ValidationError("projective elements are linearly dependent")
    q = np.array([f.q for f in forms])
    axes = np.stack([f.v for f in forms], axis=1)
    return WalkState(
        x=np.full(m, 1.0 / m),
        accumulated_op=ID2.copy(),
        unitary=ID2.copy(),
        system_state=psi0.copy(),
        steps=0,
        elements=elements,
        q=q,
        axes=axes,
    )


def walk_arrays(plan: PpovmPlan) -> tuple[np.ndarray, np.ndarray]:
    """(q, V0) kernel inputs for the plan's active elements."""
    forms = [pauli_decompose(E) for E in plan.elements[plan.active]]
    q = np.array([f.q for f in forms])
    V0 = np.stack([f.v for f in forms], axis=1)
    return q, V0


def plan_step(state: WalkState, cfg: WalkConfig) -> StepPlan:
    """Construct the weak measurement for the current position."""
    m = state.x.shape[0]
    if float(np.max(state.x)) >= 1.0 - cfg.epsilon_vertex:
        raise GeometryError("walk already terminated; no further step to plan")
    xq, r, rn_sq, b, dist, length, weight, t_iden, t_bloch = _kernels.plan_core(
        state.x, state.q, state.axes, cfg.phi
    )
    if np.any(weight <= 0.0):
        raise GeometryError(f"non-positive step weight encountered: {weight}")
    tol = cfg.tol
    directions = np.empty((m, 3))
    next_positions = np.empty((m, m))
    targets = np.empty((m, 2, 2), dtype=complex)
    operators = np.empty((m, 2, 2), dtype=complex)
    ancilla_weights = np.empty(m)
    ancilla_states = np.empty((m, 2), dtype=complex)
    for k in range(m):
        directions[k] = (state.axes[:, k] - r) / dist[k]
        targets[k] = t_iden[k] * ID2 + np.array(
            [
                [t_bloch[k, 2], t_bloch[k, 0] - 1.0j * t_bloch[k, 1]],
                [t_bloch[k, 0] + 1.0j * t_bloch[k, 1], -t_bloch[k, 2]],
            ]
        )
        operators[k], ancilla_weights[k], ancilla_states[k] = reconstruct_operator(
            targets[k], cfg.phi, tol
        )
        t_frac = length[k] / dist[k]
        bary = (1.0 - t_frac) * xq
        bary[k] += t_frac
        y = bary / state.q
        next_positions[k] = y / y.sum()
    completeness = float(np.max(np.abs(targets.sum(axis=0) - ID2)))
    if completeness > tol.step_completeness:
        raise NumericsError(f"step targets do not sum to identity ({completeness:.3e})")
    weight_sum = abs(weight.sum() - 1.0 / (1.0 - rn_sq))
    balance = float(np.max(np.abs((weight[:, None] * (length[:, None] * directions)).sum(axis=0))))
    if weight_sum > tol.weight_residual or balance > tol.weight_residual:
        raise NumericsError(
            f"weight equations violated (sum {weight_sum:.3e}, balance {balance:.3e})"
        )
    # ancilla elements must themselves form a projective POVM
    anc = sum(
        ancilla_weights[k] * np.outer(ancilla_states[k], ancilla_states[k].conj())
        for k in range(m)
    )
    if float(np.max(np.abs(anc - ID2))) > tol.step_completeness:
        raise NumericsError("ancilla measurement elements do not sum to identity")
    return StepPlan(
        directions=directions,
        lengths=length,
        weights=weight,
        next_positions=next_positions,
        targets=targets,
        operators=operators,
        ancilla_weights=ancilla_weights,
        ancilla_states=ancilla_states,
        r=r,
        b=float(b),
    )


def advance(state: WalkState, plan: StepPlan, outcome: int) -> WalkState:
    """Apply outcome ``outcome`` of the planned measurement to the state."""
    M = plan.operators[outcome]
    a = state.accumulated_op
    new_acc = np.array(
        [
            [M[0, 0] * a[0, 0], M[0, 0] * a[0, 1] + M[0, 1] * a[1, 1]],
            [0.0, M[1, 1] * a[1, 1]],
        ],
        dtype=complex,
    )
    svals = np.linalg.svd(new_acc, compute_uv=False)
    new_acc = new_acc / svals[0]
    unitary = polar_unitary(new_acc)
    psi = M @ state.system_state
    norm = float(np.linalg.norm(psi))
    if norm < 1e-14:
        raise NumericsError("outcome has zero probability on the current state")
    forms = effective_elements(unitary, state.elements)
    return replace(
        state,
        x=plan.next_positions[outcome].copy(),
        accumulated_op=new_acc,
        unitary=unitary,
        system_state=psi / norm,
        steps=state.steps + 1,
        axes=np.stack([f.v for f in forms], axis=1),
    )


def vertex_check(state: WalkState, cfg: WalkConfig) -> int | None:
    """Index of the reached vertex, or None while the walk is still inside."""
    imax = int(np.argmax(state.x))
    if state.x[imax] >= 1.0 - cfg.epsilon_vertex:
        return imax
    return None
