"""Exception hierarchy shared across the package."""


class ZenNASError(Exception):
    """Base class for all package errors."""


class StructuralError(ZenNASError, ValueError):
    """Tensor or layer shapes do not fit together."""


class ArchParseError(ZenNASError, ValueError):
    """Malformed architecture text. ``location`` names the offending line or field."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class MutationExhausted(ZenNASError):
    """No valid mutation found within the attempt limit."""


class SpaceInfeasible(ZenNASError):
    """The search space cannot produce an architecture that fits the budget."""


class DegenerateScore(ZenNASError):
    """The scoring network produced no signal (every channel dead or zero response)."""


class ConfigError(ZenNASError, ValueError):
    """Invalid or incomplete configuration."""


class CheckpointError(ZenNASError):
    """Checkpoint file is corrupt or from an incompatible version."""
