"""Exception types shared by every module."""


class EnspecError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(EnspecError, ValueError):
    """An input violated a documented precondition."""


class ResourceError(EnspecError):
    """The requested computation exceeds the desk-scale dimension guard."""


class CertificationError(EnspecError):
    """A numeric certificate did not hold."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
