"""Exception hierarchy shared by every module."""


class TimesPError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(TimesPError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class NotInvertibleError(DomainError):
    """An element or matrix is not invertible modulo the requested modulus."""


class PreconditionError(DomainError):
    """A hypothesis required by a construction does not hold."""


class SingularError(DomainError):
    """A determinant that must be nonzero vanished."""


class ResourceError(TimesPError):
    """A configured size or iteration bound was exceeded."""


class CertificateInvalidError(TimesPError):
    """A generator produced data that failed its own internal check.

    This signals a bug, never a user error.
    """


class HypothesisError(PreconditionError):
    """The digit polynomial of a Bernoulli measure is not certified nonvanishing on the circle."""
