"""Exception types shared across the toolkit."""


class StructEvalError(Exception):
    """Base class for all structeval errors."""


class ConfigError(StructEvalError):
    """Unknown metric or reward name, or an invalid configuration value."""


class EmptyCorpus(StructEvalError):
    """A corpus-level operation received no scoreable documents."""


class InvalidReference(StructEvalError):
    """A reference document failed to parse; references must be well-formed."""


class GroupTooSmall(StructEvalError):
    """Advantage normalization needs at least two samples per group."""


class LengthMismatch(StructEvalError):
    """Paired score lists must have equal lengths."""


class NonFiniteCost(StructEvalError):
    """Assignment cost matrices must contain only finite values."""


class MalformedLine(StructEvalError):
    """A corpus line is not a valid record."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(StructEvalError):
    """A corpus contains the same record id twice."""

    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id: {record_id!r}")
        self.record_id = record_id
