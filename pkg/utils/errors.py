"""
Exception hierarchy for the smooth copula bootstrap package
"""


class SmoothBootError(Exception):
    """Base class for all package errors"""


class DomainError(SmoothBootError, ValueError):
    """Input lies outside the mathematical domain of an operation"""


class SingularParameterError(DomainError):
    """Parameter value where a formula degenerates"""


class ArgumentError(SmoothBootError, ValueError):
    """Malformed or insufficient arguments"""


class UndefinedCorrelationError(ArgumentError):
    """Rank correlation of a constant column"""


class UnsupportedOperationError(SmoothBootError, NotImplementedError):
    """Family, kernel or dimension combination without an implementation"""


class ConvergenceError(SmoothBootError, RuntimeError):
    """Root bracketing or iterative refinement failed"""


class EmptyContourError(SmoothBootError):
    """No contour exists at the requested level"""
