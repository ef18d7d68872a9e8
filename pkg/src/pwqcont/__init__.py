"""Continuity tests and Lyapunov certificates for piecewise quadratic functions
on simplicial conic partitions."""
from .cones import (SimplicialConicPartition, build_partition, locate, partition_from_dict,
                    shared_boundary, validate_partition)
from .continuity import (PwqFunction, check_gamma, check_rays, check_subspace, cross_validate,
                         materialize_from_phi, synthesize_gamma, synthesize_phi)
from .errors import (InvalidInputError, OutOfDomainError, PartitionInvalidError, PwqError,
                     SolverError)
from .lyapunov import ConewiseLinearSystem, StabilityCertificate, synthesize, verify
from .numerics import DEFAULT_PROFILE, ToleranceProfile
from .projection import ProjectionProblem, solve_onesided, solve_projection, solve_symmetric
from .simulation import Trajectory, evaluate_along, simulate

__all__ = [
    "ConewiseLinearSystem",
    "DEFAULT_PROFILE",
    "InvalidInputError",
    "OutOfDomainError",
    "PartitionInvalidError",
    "ProjectionProblem",
    "PwqError",
    "PwqFunction",
    "SimplicialConicPartition",
    "SolverError",
    "StabilityCertificate",
    "ToleranceProfile",
    "Trajectory",
    "build_partition",
    "check_gamma",
    "check_rays",
    "check_subspace",
    "cross_validate",
    "evaluate_along",
    "locate",
    "materialize_from_phi",
    "partition_from_dict",
    "shared_boundary",
    "simulate",
    "solve_onesided",
    "solve_projection",
    "solve_symmetric",
    "synthesize",
    "synthesize_gamma",
    "synthesize_phi",
    "validate_partition",
    "verify",
]
