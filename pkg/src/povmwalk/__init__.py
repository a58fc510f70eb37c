"""Qubit POVM simulation via a random walk of destructive weak measurements."""

from .engine import (
    OracleReport,
    OutcomeStatistics,
    StateSpec,
    TrajectoryRecord,
    Verdict,
    compare_statistics,
    destructiveness_metric,
    oracle_enumerate,
    run_pipeline,
    run_trajectory,
    sample_step_outcome,
)
from .errors import (
    ConstraintError,
    GeometryError,
    NumericsError,
    PovmWalkError,
    SingularOperatorError,
    ValidationError,
)
from .fixtures import sic_povm, trine_povm, z_povm
from .povm import (
    DependenceWitness,
    LipovmBranch,
    LipovmLeaf,
    Povm,
    PpovmPlan,
    born_probabilities,
    decompose_to_lipovms,
    find_dependence,
    split_once,
    to_ppovm,
    tree_leaves,
    validate_povm,
)
from .qubit_algebra import (
    BlochForm,
    EigenPair2,
    eigh2,
    inv_sqrt_psd,
    pauli_compose,
    pauli_decompose,
    polar_unitary,
)
from .tolerances import DEFAULT_TOL, Tolerances
from .walk import (
    SimplexMap,
    StepPlan,
    WalkConfig,
    WalkState,
    advance,
    bloch_to_simplex,
    init_walk,
    make_simplex_map,
    mixture_bloch,
    plan_step,
    reconstruct_operator,
    simplex_to_bloch,
    solve_step_length,
    target_element,
    vertex_check,
)

__version__ = "0.1.0"
