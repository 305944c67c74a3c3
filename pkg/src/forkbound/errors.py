"""Exception types shared across the package."""


class ForkboundError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(ForkboundError):
    """A distribution, topology, or operation parameter is out of its legal range."""


class ThetaDomainError(ForkboundError):
    """theta lies outside the envelope's admissible domain (MGF diverges)."""


class InfeasibleThetaError(ForkboundError):
    """The stability condition fails at the requested theta.

    Carries the (negative or zero) stability slack rho_arrival - rho_service.
    """

    def __init__(self, message: str, slack: float):
        super().__init__(message)
        self.slack = slack


class InfeasibleSystemError(ForkboundError):
    """No theta in the searched interval satisfies the stability condition."""


class UnstableError(ForkboundError):
    """Exact oracle requested for an unstable queue (arrival rate >= capacity)."""


class InsufficientSamplesError(ForkboundError):
    """Too few samples to estimate the requested quantile.

    Carries the minimum sample count required.
    """

    def __init__(self, message: str, min_required: int):
        super().__init__(message)
        self.min_required = min_required


class ConfigError(ForkboundError):
    """Malformed scenario/figure config; carries file path and offending field."""

    def __init__(self, message: str, path: str = "", field: str = ""):
        super().__init__(message)
        self.path = path
        self.field = field
