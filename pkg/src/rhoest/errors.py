class RhoError(Exception):
    """Base class for errors raised by the package."""


class NumericalError(RhoError):
    """A numerical routine did not reach its tolerance.

    `estimate` carries the achieved error estimate when one is available.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class UsageError(RhoError, ValueError):
    """Invalid arguments (empty net, missing penalty, ...)."""


class SizeGuardError(UsageError):
    """A requested net would exceed the configured size cap."""


class DepthCapError(RhoError):
    """A sampled sequence is longer than the stored depth."""
