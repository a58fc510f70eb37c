"""Central numerics policy.

All comparison thresholds used across the package live in one overridable
record so that a single object controls the accuracy contract.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12          # max-norm residual of H - H^dag
    psd: float = 1e-10                # allowed negative part of an eigenvalue
    completeness: float = 1e-10       # max-norm residual of sum(E_i) - I
    eig_reconstruct: float = 1e-11    # eigendecomposition reconstruction residual
    inv_sqrt: float = 1e-10           # R E R = I residual
    unitarity: float = 1e-11          # U^dag U - I residual
    singular: float = 1e-12           # eigenvalue below this counts as singular
    det_singular: float = 1e-14       # |det| below this counts as singular
    dependence_rel: float = 1e-9      # sigma_min / sigma_max linear-dependence cut
    born_identity: float = 1e-9       # aggregated tree probability residual
    reconstruction: float = 1e-10     # conditional reconstruction residual
    simplex: float = 1e-9             # simplex membership / roundtrip residual
    step_completeness: float = 1e-9   # sum of per-step measurement targets vs I
    weight_residual: float = 1e-10    # weight-equation residuals
    proportionality: float = 1e-8     # accumulated operator vs simplex mixture
    operator_match: float = 1e-10     # M^dag M vs target residual
    model_consistency: float = 1e-8   # destructive-model entry constraint residual
    degenerate_radius: float = 1e-12  # 1 - |r| below this is a degenerate mixture


DEFAULT_TOL = Tolerances()
