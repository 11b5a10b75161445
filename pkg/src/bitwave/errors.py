"""Exception types shared across the package."""


class BitwaveError(Exception):
    """Base class for package errors."""


class ConfigurationError(BitwaveError):
    """Unsupported family, bad flag combination, or invalid configuration."""


class NumericError(BitwaveError):
    """A numerical procedure degenerated (e.g. refinement eigen-system)."""


class ResolutionError(BitwaveError):
    """A grid is too coarse for the requested operation."""


class ConstructionError(BitwaveError):
    """A fixture cannot be built with the requested parameters."""


class ProtocolError(BitwaveError):
    """Transcript and assignment disagree, or an invalid mode combination."""


class EstimationError(BitwaveError):
    """The estimator cannot produce an estimate (e.g. zero simulated samples)."""


class PlanningError(BitwaveError):
    """No valid level plan exists for the requested size."""
