"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies rather than bare ValueError.
"""


class DdnmError(Exception):
    """Base class for package errors."""


class ConfigError(DdnmError):
    """Bad configuration: unknown key, unparsable value, out-of-range bound."""


class DataError(DdnmError):
    """Bad input data: unreadable file, non-increasing dates, gaps, bad values."""


class NumericalError(DdnmError):
    """Numerical failure: non-PD matrix, degenerate scale, moment nonexistence."""


class CapacityError(ConfigError):
    """Requested model space too large; restrict parents or shrink grids."""


class DegeneracyError(NumericalError):
    """Constraint set or linear system is rank deficient."""


class InfeasibilityError(NumericalError):
    """Constraints admit no solution (e.g. long-only target out of range)."""
