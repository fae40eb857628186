"""Exception types shared across the package.

Every error raised deliberately by this package derives from HetsemError so
callers (notably the CLI) can map failure kinds to distinct exit codes.
"""


class HetsemError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(HetsemError, ValueError):
    """A function was called with arguments violating its preconditions."""


class OutOfDomainError(HetsemError, ValueError):
    """A covariate value lies outside the spline domain (strict mode only)."""


class NotPositiveDefiniteError(HetsemError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class NearSingularError(HetsemError, ValueError):
    """det(I - B(z)) fell below the singularity floor for some observation."""

    def __init__(self, msg: str, row: int | None = None):
        super().__init__(msg)
        self.row = row


class MissingColumnError(HetsemError, KeyError):
    """A named column is absent from the input CSV."""


class NonFiniteDataError(HetsemError, ValueError):
    """Input data contain NaN or infinite entries."""


class PathologicalDataError(HetsemError, RuntimeError):
    """The sampler aborted because nearly all proposals were singular."""


class RetryCapExceededError(HetsemError, RuntimeError):
    """A rejection-sampling loop hit its retry cap."""
