"""Exception hierarchy shared by every module."""


class LongmemError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(LongmemError, ValueError):
    """A parameter lies outside the open interval where the model is defined."""


class InsufficientDataError(LongmemError):
    """A finite (custom) covariance sequence is too short for the request."""


class NonEmbeddableError(LongmemError):
    """The circulant embedding of a covariance has significantly negative eigenvalues."""
