"""Riemannian geometry of matrix orbit spaces.

Quotient metric and minimal segments on sorted-spectrum chambers,
symplectic reduction of straight-line flows to spin Calogero-Moser
dynamics, Weyl-chamber billiards for restricted root systems, and an
independent eigenvalue-flow oracle validating every trajectory.
"""

from .chamber import (
    DEFAULT_DEGENERACY_TOL,
    ChamberPoint,
    MinimalSegment,
    chamber_map,
    distance,
    minimal_segment,
    multiplicity_partition,
    partition_refines,
    segment_angle,
    segment_stratum_check,
    strata_type,
)
from .dynamics import (
    Event,
    ReducedDerivative,
    Trajectory,
    VariationalTrajectory,
    casimirs,
    classical_cm_field,
    hamiltonian_reduced,
    integrate,
    variational_flow,
    vector_field,
    z_matrix,
)
from .errors import InputError, IntegrationError, InvariantError
from .models import MatrixModel, model_from_name
from .oracle import (
    circle_orbit_curve,
    closed_form_2x2,
    compare_to_eigenflow,
    eigenflow,
)
from .polar import (
    BilliardPath,
    PolarReducedState,
    RestrictedRootSystem,
    RootSystemReport,
    billiard_geodesic,
    builtin_root_system,
    integrate_polar,
    load_root_system,
    matrix_state_to_polar,
    polar_hamiltonian,
    polar_state_to_matrix,
    polar_vector_field,
    save_root_system,
    verify_root_system,
)
from .reduction import (
    CotangentPoint,
    GaugeFrame,
    ReducedState,
    hamiltonian_ambient,
    momentum_map,
    reconstruct,
    reduce,
)

__version__ = "0.1.0"

__all__ = [
    "BilliardPath",
    "ChamberPoint",
    "CotangentPoint",
    "DEFAULT_DEGENERACY_TOL",
    "Event",
    "GaugeFrame",
    "InputError",
    "IntegrationError",
    "InvariantError",
    "MatrixModel",
    "MinimalSegment",
    "PolarReducedState",
    "ReducedDerivative",
    "ReducedState",
    "RestrictedRootSystem",
    "RootSystemReport",
    "Trajectory",
    "VariationalTrajectory",
    "billiard_geodesic",
    "builtin_root_system",
    "casimirs",
    "chamber_map",
    "circle_orbit_curve",
    "classical_cm_field",
    "closed_form_2x2",
    "compare_to_eigenflow",
    "distance",
    "eigenflow",
    "hamiltonian_ambient",
    "hamiltonian_reduced",
    "integrate",
    "integrate_polar",
    "load_root_system",
    "matrix_state_to_polar",
    "minimal_segment",
    "model_from_name",
    "momentum_map",
    "multiplicity_partition",
    "partition_refines",
    "polar_hamiltonian",
    "polar_state_to_matrix",
    "polar_vector_field",
    "reconstruct",
    "reduce",
    "save_root_system",
    "segment_angle",
    "segment_stratum_check",
    "strata_type",
    "variational_flow",
    "vector_field",
    "verify_root_system",
    "z_matrix",
]
