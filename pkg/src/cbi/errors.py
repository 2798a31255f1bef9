"""Exception hierarchy shared by every module.

Validation failures derive from :class:`ValidationError` (a ``ValueError``)
so callers can catch bad input in one place; numerical failures derive from
:class:`SolverError`.
"""

from __future__ import annotations

from typing import Any


class CBIError(Exception):
    """Base class for all package errors."""


class ValidationError(CBIError, ValueError):
    """Input rejected before any computation took place."""


class NonIncreasingBreakpoints(ValidationError):
    pass


class MassOutOfRange(ValidationError):
    pass


class MassSumMismatch(ValidationError):
    pass


class EndpointMismatch(ValidationError):
    pass


class RefinementOverflow(ValidationError):
    pass


class InvalidPlacement(ValidationError):
    pass


class ConfigError(ValidationError):
    """Malformed or unknown fields in a problem configuration."""


class CostGuard(ValidationError):
    """Oracle request exceeds its size limits."""


class DegenerateContext(ValidationError):
    """The h function is undefined for the given (m, k, r)."""


class InvalidRegime(ValidationError):
    """Solver called outside the (r, k, partition) regime it handles."""


class SolverError(CBIError, ArithmeticError):
    pass


class PoleEvaluation(SolverError):
    pass


class OutOfBranchRange(SolverError, ValueError):
    pass


class ZeroDenominator(SolverError):
    pass


class InconsistentSolution(SolverError):
    pass


class NoConvergence(SolverError):
    """Fixed-point iteration hit its iteration cap.

    The last iterate is attached as ``solution`` so callers can inspect it.
    """

    def __init__(self, message: str, solution: Any = None):
        super().__init__(message)
        self.solution = solution
