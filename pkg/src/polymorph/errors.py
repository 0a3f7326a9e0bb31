"""Exception hierarchy shared by all modules."""


class PolymorphError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ValidationError(PolymorphError, ValueError):
    """An object violates a structural or marginal invariant."""

    exit_code = 3


class CompositionError(PolymorphError, ValueError):
    """Two morphisms cannot be composed (their spaces do not match)."""

    exit_code = 4


class DomainError(PolymorphError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 5


class ParseError(PolymorphError, ValueError):
    """A text record could not be parsed into a domain object."""

    exit_code = 6
