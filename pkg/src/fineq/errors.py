"""Exception types raised across the package."""


class FineqError(Exception):
    """Base class for all package errors."""


class InputError(FineqError, ValueError):
    """Malformed or inconsistent input data."""


class ResolutionError(FineqError):
    """A quadrature grid or band limit cannot represent the requested quantity."""


class IntegrationError(FineqError):
    """A time integrator failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FlowError(FineqError):
    """A path lacks the classical flow an operation needs."""


class NotALoopError(FineqError):
    """The time-one map of a path is not the identity."""


class ConfigError(FineqError):
    """Unknown names or invalid values in a run configuration."""


class InsufficientDataError(FineqError):
    """Too few usable samples to fit a rate."""
