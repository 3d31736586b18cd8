"""Exception hierarchy shared by all modules."""


class MarkovianizeError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(MarkovianizeError, ValueError):
    pass


class NotHermitianError(MarkovianizeError, ValueError):
    pass


class NotUnitaryError(MarkovianizeError, ValueError):
    pass


class InvalidStateError(MarkovianizeError, ValueError):
    """Raised for density matrices or effects outside their admissible range."""


class DomainError(MarkovianizeError, ValueError):
    """A scalar parameter lies outside the domain of a formula."""


class ResourceCapError(MarkovianizeError, RuntimeError):
    """A dense construction would exceed the configured memory budget."""
