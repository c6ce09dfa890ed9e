"""Exception hierarchy. The CLI maps each family to a stable exit code."""

from __future__ import annotations


class EntropyRagError(Exception):
    """Base class for every error raised by this package."""


class InputError(EntropyRagError):
    """Bad user-supplied input (files, parameters). CLI exit code 2."""


class ParseError(InputError):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(InputError):
    pass


class IndexBuildError(InputError):
    pass


class BackendError(EntropyRagError):
    """A model or embedder backend failed. CLI exit code 3.

    ``retryable`` is true for timeouts, connection failures, 429 and 5xx
    responses; false for malformed payloads and other client errors.
    """

    def __init__(self, message: str, *, retryable: bool, status: int | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.status = status


class EvaluationError(EntropyRagError):
    """A record failed during a strict evaluation run. CLI exit code 4."""

    def __init__(self, record_id: str, cause: BaseException):
        super().__init__(f"record {record_id!r} failed: {cause}")
        self.record_id = record_id
        self.cause = cause
