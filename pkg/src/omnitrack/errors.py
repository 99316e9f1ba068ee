class OmniError(Exception):
    """Base class for errors raised by this package."""


class DomainError(OmniError, ValueError):
    """Input lies outside the domain of a geometric operation."""


class ValidationError(OmniError, ValueError):
    """An annotation or configuration value violates its invariants."""


class AdapterError(OmniError, RuntimeError):
    """The external tracker process misbehaved (crash, timeout, bad message)."""
