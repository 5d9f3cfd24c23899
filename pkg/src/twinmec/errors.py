"""Exception types shared across the package."""


class TwinmecError(Exception):
    """Base class for package-specific errors."""


class InvalidResolutionError(TwinmecError):
    """Interpolation resolution is zero or negative."""


class InvalidObservationError(TwinmecError):
    """Observation vector contains non-finite entries or has the wrong shape."""


class DegenerateEvidenceError(TwinmecError):
    """Assimilation produced an all-zero unnormalised posterior."""


class ConvergenceError(TwinmecError):
    """Iterative solver failed to reach its tolerance within the sweep budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvalidGeometryError(TwinmecError):
    """Node placement is outside the configured service area."""


class DegenerateChannelError(TwinmecError):
    """Channel realization has a zero-norm vector where a direction is required."""


class UnreachableDestinationError(TwinmecError):
    """A positive traffic share was routed to a destination with zero rate."""


class InvalidTwinDeviationError(TwinmecError):
    """Estimated capacity deviation is negative or at least the capacity itself."""


class ConstraintViolationError(TwinmecError):
    """An offloading profile violates one of its feasibility constraints."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class EmptyConfigurationError(TwinmecError):
    """A required collection, choice, or selection was empty or unknown."""


class ConfigSchemaError(TwinmecError):
    """Configuration file failed validation; ``field`` holds the offending path."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
