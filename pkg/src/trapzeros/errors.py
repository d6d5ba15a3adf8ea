"""Exception types raised by the package."""


class ConfigurationError(ValueError):
    """Invalid sizes, parameters or configuration values."""


class ResourceError(RuntimeError):
    """Requested computation exceeds a resource guard."""


class NumericalError(ArithmeticError):
    """A numerical solve did not meet its residual tolerance."""
