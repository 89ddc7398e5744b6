"""Similarity solutions and moving boundary problems for a modulated
two-component mKdV system, with every analytic claim backed by a residual
or conservation check."""

from .coupling import CouplingSpec, make_coupling, source_functions
from .errors import (
    ConfigError,
    DomainError,
    GridError,
    Mkdv2cError,
    ShootingError,
    SingularStateError,
    StepUnderflowError,
)
from .fields import FieldGrid, reconstruct_fields, similarity_grid
from .moving_boundary import (
    BoundaryConstants,
    MovingBoundaryProblem,
    boundary_curves,
    build_problem,
    derive_constants,
    shoot_for_targets,
    verify_boundary_conditions,
)
from .params import ExponentReduction, SimilarityParams, SystemParams, reduce_exponents
from .pde import mol_direct_solve, pde_residual
from .painleve2 import (
    PiiSolution,
    canonical_pii_residual,
    decoupled_erp2_rhs,
    decoupling_coupling,
    lukashevich_bt,
    map_reduced_to_pii,
    pii_integrate,
    rational_hierarchy,
)
from .report import ResidualReport
from .solver import (
    InvariantSeries,
    ReducedProfile,
    ReducedState,
    ermakov_invariant,
    integrate,
    invariant_candidate_drifts,
    invariant_drift,
    merge_profiles,
    oracle_terminal,
    rhs,
)

__version__ = "0.1.0"
