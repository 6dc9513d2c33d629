"""Exception hierarchy shared across the package."""


class CptMdpError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CptMdpError):
    """Malformed input document (bad JSON, wrong shape, bad field)."""


class ValidationError(CptMdpError):
    """Structurally valid input that violates a model or objective invariant."""


class SolverError(CptMdpError):
    """Numerical solver failed in a way the caller cannot recover from."""


class SingularMatrixError(SolverError):
    """Linear system rejected because a pivot fell below the threshold."""


class IterationLimitError(SolverError):
    """Simplex exceeded its pivot budget."""


class InfeasiblePointError(SolverError):
    """Strategy extraction was asked for a point the LP rejects."""


class ScopeError(CptMdpError):
    """A strategy was used at the wrong scope (quotient vs original)."""
