"""Exception hierarchy shared by all modules."""


class ErrboundError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(ErrboundError, ValueError):
    pass


class InfeasiblePointError(ErrboundError, ValueError):
    """A point expected to lie in a set violates it beyond tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class EmptyPolyhedronError(ErrboundError):
    pass


class UnsupportedSizeError(ErrboundError):
    """Exact enumeration was requested beyond the configured size limits."""


class ProjectionError(ErrboundError):
    """A numerical projection did not reach a feasible point."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class EstimatorUndefinedError(ErrboundError):
    """Every probe of a sampling estimator evaluated to +inf."""


class JacobianMismatchError(ErrboundError, ValueError):
    pass


class NotSurjectiveError(ErrboundError, ValueError):
    pass


class SolutionSetSearchError(ErrboundError):
    """No feasible point of the solution set was found in the search box."""


class ParseError(ErrboundError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class ProblemValidationError(ErrboundError, ValueError):
    """A problem file parsed but describes an invalid instance."""
