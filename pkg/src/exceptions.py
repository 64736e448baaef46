"""
Exception hierarchy for the toric residue engine.

Every error carries the process exit code the command-line driver uses
when the error escapes a command.
"""
from typing import Any, Dict, List, Optional

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER_INCOMPLETE = 3
EXIT_HYPOTHESIS_FAILED = 4


class ToricError(Exception):
    """Base class for all engine errors."""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """Structured form written by the CLI on failure."""
        payload = {"error": self.__class__.__name__, "message": self.message}
        for key, value in self.details.items():
            payload[key] = value if isinstance(value, (int, float, str, bool, type(None))) else str(value)
        return payload


# lattice_core / polytopes
class NonSimplicial(ToricError):
    pass


class DimensionMismatch(ToricError):
    pass


class OriginNotInterior(ToricError):
    pass


class NotAnEdge(ToricError):
    pass


# fans
class ConeNotInFan(ToricError):
    pass


class NotAFibration(ToricError):
    pass


class NonCompactifiableGroup(ToricError):
    def __init__(self, message: str = "", group_index: Optional[int] = None, **details: Any):
        super().__init__(message, group_index=group_index, **details)
        self.group_index = group_index


# toric_geom
class NonSmoothCone(ToricError):
    pass


class ZeroWeight(ToricError):
    pass


class IndeterminateRatio(ToricError):
    pass


# testconfig
class InvalidParameter(ToricError):
    pass


class DegenerateVolume(ToricError):
    pass


class NotNef(ToricError):
    pass


# critical_residue
class SolverIncomplete(ToricError):
    exit_code = EXIT_SOLVER_INCOMPLETE

    def __init__(self, message: str = "", found: int = 0, expected: int = 0,
                 partial: Optional[List[Any]] = None):
        super().__init__(message, found=found, expected=expected)
        self.found = found
        self.expected = expected
        self.partial = partial or []


class DegenerateCriticalPoint(ToricError):
    pass


# boundary_residue
class SubdivisionBudgetExceeded(ToricError):
    pass


class HypothesisFailed(ToricError):
    exit_code = EXIT_HYPOTHESIS_FAILED


# mirror_testconfigs
class NoSolutionFound(ToricError):
    exit_code = EXIT_SOLVER_INCOMPLETE

    def __init__(self, message: str = "", best_residual: Any = None):
        super().__init__(message, best_residual=best_residual)
        self.best_residual = best_residual


class NotWeakFano(UserWarning):
    """Leading-order mirror rule applied outside the weak Fano regime."""
