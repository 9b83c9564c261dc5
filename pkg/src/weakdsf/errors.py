"""Exception types shared across the package."""


class WeakDsfError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(WeakDsfError, ValueError):
    """An invalid or inconsistent configuration value."""


class NumericalError(WeakDsfError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class SchemaError(WeakDsfError, ValueError):
    """A data file does not match the expected schema or version."""
