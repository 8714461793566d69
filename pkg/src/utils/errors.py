class AnalysisError(Exception):
    """Base class for every error raised by the analysis pipeline."""


class RecordParseError(AnalysisError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RecordValidationError(AnalysisError):
    pass


class ArgumentError(AnalysisError):
    pass


class EmptyDomainError(AnalysisError):
    pass


class OutOfWindowError(AnalysisError):
    pass


class CredentialError(AnalysisError):
    pass


class TransientError(AnalysisError):
    def __init__(self, message: str, retry_after: float | None = None):
        self.retry_after = retry_after
        if retry_after is not None:
            message = f"{message} (retry after {retry_after:.0f}s)"
        super().__init__(message)
