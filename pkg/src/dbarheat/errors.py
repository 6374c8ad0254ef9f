"""Exception types shared across the package.

The command line layer maps these onto process exit codes, so solver code
should raise the most specific type that applies rather than a bare
RuntimeError.
"""

__all__ = [
    "ConfigError",
    "NumericalError",
    "ConvergenceError",
    "BoundViolationError",
]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration input."""


class NumericalError(RuntimeError):
    """A computation produced values that cannot be trusted (blow-up, NaN)."""


class ConvergenceError(NumericalError):
    """An iterative procedure failed to reach its tolerance."""


class BoundViolationError(RuntimeError):
    """An asserted analytic bound was violated beyond the allowed slack."""
