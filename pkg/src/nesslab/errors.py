"""Exception hierarchy shared by all nesslab modules."""


class NessLabError(Exception):
    """Base class for library errors."""


class DomainError(NessLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidKernelError(DomainError):
    pass


class ConfigError(NessLabError, ValueError):
    """Invalid configuration; carries the offending key path when known."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ShapeError(NessLabError, ValueError):
    pass


class RangeError(DomainError):
    pass


class TruncationError(NessLabError, ValueError):
    """The characteristic function has not decayed at the Fourier cutoff."""


class MetricDomainError(DomainError):
    """GTW distance requested for laws whose second moments differ."""


class IllConditionedFitError(NessLabError, ArithmeticError):
    pass


class ContractionViolationError(NessLabError, RuntimeError):
    """Observed iteration ratio exceeded the proven contraction factor."""
