"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class UndefinedSpacingError(DomainError):
    """Minimal spacing requested for fewer than two points."""


class ThresholdTooLargeError(DomainError):
    """Proximity threshold too large for the cell decomposition."""


class InstanceTooLargeError(DomainError):
    """Exact search refused because the instance exceeds its budget."""


class ExhaustiveLimitError(DomainError):
    """Exhaustive subset search refused: limit exceeded."""


class FullyDecimatedError(RuntimeError):
    """Decimation removed every point."""
