"""Conservative Bayesian reliability assessment over interval-probability priors."""

from .errors import CBIError, NoConvergence, SolverError, ValidationError
from .model import (
    IntervalPartition,
    Observation,
    Placement,
    ReliabilityTarget,
    refine_partition,
    uniform_consistent_partition,
    validate_partition,
)
from .planner import PlanResult, plan_demands_beta, plan_demands_cbi
from .solver import (
    Branch,
    DiscretePrior,
    FixedPointSolution,
    build_conservative_prior,
    objective_value,
    solve,
)

__all__ = [
    "Branch",
    "CBIError",
    "DiscretePrior",
    "FixedPointSolution",
    "IntervalPartition",
    "NoConvergence",
    "Observation",
    "PlanResult",
    "Placement",
    "ReliabilityTarget",
    "SolverError",
    "ValidationError",
    "build_conservative_prior",
    "objective_value",
    "plan_demands_beta",
    "plan_demands_cbi",
    "refine_partition",
    "solve",
    "uniform_consistent_partition",
    "validate_partition",
]
