class RovodefError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(RovodefError, ValueError):
    """Invalid or missing configuration input."""


class PhysicsPreconditionError(RovodefError, ValueError):
    """A physical precondition of an operation does not hold (e.g. resonant laser)."""


class QuadratureError(RovodefError, RuntimeError):
    """Numerical quadrature failed to converge to the requested tolerance."""
