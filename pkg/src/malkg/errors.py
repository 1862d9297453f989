"""Exception taxonomy shared across the toolkit.

Every error carries a stable machine-readable ``code`` so the CLI can print
single-line reasons and the HTTP service can map errors to status codes
without string matching.
"""

from __future__ import annotations


class MalkgError(Exception):
    """Base class for all operational errors."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SchemaError(MalkgError):
    code = "schema-error"


class BratParseError(MalkgError):
    code = "brat-parse-error"

    def __init__(self, message: str, line_no: int | None = None, line: str | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
            if line is not None:
                message += f" (content: {line!r})"
        super().__init__(message)
        self.line_no = line_no
        self.line = line


class UnpairedFileError(MalkgError):
    code = "unpaired-file"


class StoreError(MalkgError):
    code = "store-error"


class UnknownEntityError(StoreError):
    code = "unknown-entity"


class UnknownRelationError(StoreError):
    code = "unknown-relation"


class UnknownClassError(StoreError):
    code = "unknown-class"


class SelfLoopError(StoreError):
    code = "self-loop"


class AliasConflictError(StoreError):
    code = "alias-conflict"


class SnapshotError(MalkgError):
    code = "snapshot-error"


class CorruptSnapshotError(SnapshotError):
    code = "corrupt-snapshot"


class SnapshotVersionError(SnapshotError):
    code = "snapshot-version-mismatch"


class EnrichmentError(MalkgError):
    code = "enrichment-error"


class InvalidHashError(EnrichmentError):
    code = "invalid-hash"


class ReputationAuthError(EnrichmentError):
    code = "reputation-auth-failure"


class ReputationRateLimitError(EnrichmentError):
    code = "reputation-rate-limit"

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class ReputationResponseError(EnrichmentError):
    code = "reputation-malformed-response"


class FeedError(MalkgError):
    code = "feed-error"


class ManifestError(FeedError):
    code = "manifest-error"


class FetchError(FeedError):
    code = "fetch-error"


class EmptyTextError(FeedError):
    code = "empty-text"


class QueryError(MalkgError):
    code = "query-error"


class ThresholdError(QueryError):
    code = "threshold-out-of-range"


class UnknownReportError(QueryError):
    code = "unknown-report"


class NTriplesParseError(MalkgError):
    code = "ntriples-parse-error"

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigError(MalkgError):
    code = "config-error"

    def __init__(self, message: str, field: str | None = None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class WriterBusyError(MalkgError):
    code = "writer-busy"
