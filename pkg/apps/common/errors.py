class PipelineError(Exception):
    """Base class of every error raised by the substitution pipeline."""

    code = "pipeline_error"
    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def as_dict(self) -> dict:
        return {"code": self.code, "detail": self.message, **self.details}


class PreconditionError(PipelineError):
    code = "precondition"
    exit_code = 2


class CapExceededError(PipelineError):
    code = "cap_exceeded"
    exit_code = 3

    def __init__(self, message: str, cap: str, limit: int, **details):
        super().__init__(message, cap=cap, limit=limit, **details)
        self.cap = cap
        self.limit = limit


class SubstitutionParseError(PipelineError):
    code = "parse_error"
    exit_code = 4

    def __init__(self, message: str, line: int | None = None, **details):
        super().__init__(message if line is None else f"line {line}: {message}", line=line, **details)
        self.line = line
