"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An invalid configuration value (discount, bandwidth, schedule, ...)."""


class FeatureRankError(ConfigurationError):
    """Rank-deficient features: fixed point or conditioning number undefined."""


class RunAborted(RuntimeError):
    """A run hit non-finite parameters.  The partial trace is attached."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class InvariantViolation(RuntimeError):
    """A runtime invariant (reward bound, budget accounting) was broken."""
