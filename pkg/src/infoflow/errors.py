"""Exception types shared across the package."""


class InfoflowError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDataError(InfoflowError, ValueError):
    """Input data cannot support the requested estimate.

    Raised for zero-variance columns, singular covariance subsets,
    deterministic (zero-residual) fits and series that are too short.
    """


class ConsistencyError(InfoflowError, ArithmeticError):
    """An internal algebraic identity was violated beyond tolerance.

    Signals a numerical problem (or a bug), never bad user input:
    e.g. a theoretically nonnegative quantity coming out clearly negative.
    """


class ConfigError(InfoflowError, ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""
