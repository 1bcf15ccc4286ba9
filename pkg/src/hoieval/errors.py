"""Error types shared across the toolkit."""


class HoiEvalError(Exception):
    """Base class for all toolkit errors."""


class FormatError(HoiEvalError):
    """Input bytes/JSON do not follow the declared file format."""


class ValidationError(HoiEvalError):
    """Well-formed input violates a domain invariant."""


class TruncationError(FormatError):
    """Binary archive ended before the record count promised by its header."""


class MissingKeyError(HoiEvalError):
    """A required archive key is absent."""

    def __init__(self, key: str):
        super().__init__(f"missing embedding key {key!r}")
        self.key = key


class ConsistencyError(HoiEvalError):
    """Two inputs that must agree (e.g. pairs vs. distributions) do not."""
