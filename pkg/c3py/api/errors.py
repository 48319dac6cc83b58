"""
Exception hierarchy for c3py.

Everything raised deliberately by the package derives from C3Error, so
callers (the CLI, the HTTP layer) can separate "checked and failed" from
programming errors.
"""

from __future__ import annotations

from typing import Optional


class C3Error(Exception):
    """Base exception for c3py errors."""
    pass


class ConfigurationError(C3Error):
    """Raised for unknown algorithm tags, bad config values or missing stores."""
    pass


class MalformedInputError(C3Error):
    """
    Raised when an input line, prefix or bucket id cannot be parsed.

    Attributes:
        line_number: 1-based line of the offending input, when known
    """

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class AlgorithmMismatchError(C3Error):
    """Raised when digests of different hash algorithms are combined."""
    pass


class EmptyInputError(C3Error):
    """Raised when an operation needs more entries than it was given."""
    pass


class ArtifactError(C3Error):
    """Raised when an on-disk artifact has bad magic, version or digest."""
    pass


class EstimatorMismatchError(C3Error):
    """Raised when the client's estimator differs from the one the server published."""
    pass


class ProtocolError(C3Error):
    """Raised on invalid group elements, zero scalars or malformed responses."""
    pass


class StoreUnavailableError(C3Error):
    """Raised when a protocol has no loaded store."""
    pass


class WorldTooLargeError(C3Error):
    """Raised when exact computation is requested on an oversized world."""
    pass


class TheoremViolation(C3Error):
    """
    Raised when a bound check fails.

    Attributes:
        report: the TheoremReport holding the counterexample
    """

    def __init__(self, report):
        super().__init__(report.dump())
        self.report = report


class UnknownProtocolError(C3Error):
    """Raised when a request names a protocol the service does not offer."""
    pass


class TransportError(C3Error):
    """Raised when the client cannot reach the service or gets an HTTP error."""

    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status
