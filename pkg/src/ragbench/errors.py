"""Exception hierarchy.

Three families map onto CLI exit codes: configuration problems (2),
service failures (3) and data errors (4).
"""

from __future__ import annotations


class RagbenchError(Exception):
    exit_code = 1


class ConfigError(RagbenchError):
    exit_code = 2


class ServiceError(RagbenchError):
    exit_code = 3

    def __init__(self, message: str, *, query_id: str | None = None, status: int | None = None):
        if query_id is not None:
            message = f"{message} (query_id={query_id})"
        super().__init__(message)
        self.query_id = query_id
        self.status = status


class DataError(RagbenchError):
    exit_code = 4


# corpus
class EmptyDocument(DataError):
    pass


class DuplicateDocId(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate doc_id: {doc_id!r}")
        self.doc_id = doc_id


class IoFailure(DataError):
    def __init__(self, path, reason: str = ""):
        super().__init__(f"I/O failure on {path}: {reason}" if reason else f"I/O failure on {path}")
        self.path = path


class UnknownPassageId(DataError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class CorruptStore(DataError):
    pass


# retrieval
class EmptyCorpus(DataError):
    pass


class MissingVectors(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NoOracleAvailable(DataError):
    pass


class EmptyJudgment(DataError):
    pass


# generation
class NoContext(DataError):
    pass


class MissingTranslation(ConfigError):
    pass


# evaluation
class NoReferences(DataError):
    pass


class UnsupportedLanguage(ConfigError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateInput(DataError):
    pass


class InsufficientSamples(DataError):
    pass


# orchestrator
class SchemaError(DataError):
    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class DuplicateExampleId(DataError):
    pass


class MissingRun(DataError):
    pass


class StageError(RagbenchError):
    """Wraps a failure inside a pipeline stage with the stage name and RunId."""

    def __init__(self, stage: str, run_id: str, cause: BaseException):
        super().__init__(f"stage {stage} ({run_id}) failed: {cause}")
        self.stage = stage
        self.run_id = run_id
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)


# services
class ServiceUnavailable(ServiceError):
    pass


class MalformedResponse(ServiceError):
    pass


class ContextTooLong(ServiceError):
    pass


class PortUnavailable(ServiceError):
    pass
