"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: config problems exit 2, numerical
failures exit 3, runtime invariant violations exit 4.
"""


class RootBarrierError(Exception):
    """Base class for all package errors."""


class ConfigError(RootBarrierError):
    """Invalid configuration, flags, or input files."""


class NumericalError(RootBarrierError):
    """A numerical procedure failed (bracketing, quadrature, step caps)."""


class InvariantViolation(RootBarrierError):
    """A runtime invariant check failed (containment, monotonicity, bounds)."""
