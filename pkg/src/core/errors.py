"""
Exception hierarchy

Every failure raised by the engine derives from SparseBoundsError. The CLI
maps InputError to exit code 1 and NumericalError to exit code 2.
"""

from typing import Optional


class SparseBoundsError(Exception):
    """Base class for all engine errors."""


class InputError(SparseBoundsError, ValueError):
    """Invalid user input: bad parameters, unreadable files."""


class PreconditionError(InputError):
    """An operation was called outside its documented domain."""


class DimensionMismatchError(PreconditionError):
    """Operands disagree on shape."""


class EnumerationCapError(PreconditionError):
    """A brute-force enumeration would exceed its configured cap."""


class DomainError(PreconditionError):
    """A formula was evaluated outside its validity interval."""


class MatrixParseError(InputError):
    """A matrix file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(SparseBoundsError, ArithmeticError):
    """A computation failed for numerical reasons."""


class ConvergenceError(NumericalError):
    """An iterative method did not converge within its budget."""


class EstimatorFailure(NumericalError):
    """An estimator could not produce an estimate for one trial."""


class RankDeficientError(EstimatorFailure):
    """A least-squares subproblem has a (numerically) singular Gram matrix."""


class PackingExhaustedError(NumericalError):
    """The packing construction ran out of redraw attempts."""


class InconsistencyError(NumericalError):
    """Two independent evaluations of the same quantity disagree."""


class SimulationError(NumericalError):
    """A Monte Carlo run had too many failed trials."""
