"""Exception types raised across the pipeline.

Each class carries a short ``kind`` tag; the CLI prints it as the first
field of its one-line error message so callers can match on it.
"""


class PipelineError(Exception):
    kind = "error"


class MalformedInputError(PipelineError):
    kind = "malformed-input"


class ValidationError(PipelineError):
    kind = "validation"


class InsufficientLengthError(PipelineError):
    kind = "insufficient-length"


class InsufficientDataError(PipelineError):
    kind = "insufficient-data"


class DegenerateFilterError(PipelineError):
    kind = "degenerate-filter"


class DegenerateDataError(PipelineError):
    kind = "degenerate-data"


class UndefinedCorrelationError(PipelineError):
    kind = "undefined-correlation"
