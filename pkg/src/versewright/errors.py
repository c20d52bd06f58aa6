"""Exception hierarchy shared across the package."""

from __future__ import annotations


class VersewrightError(Exception):
    """Base class for all package errors."""


class ParseError(VersewrightError):
    """A malformed record in an input file; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class RatingRangeError(VersewrightError):
    """A numeric rating fell outside its documented scale."""


class ValidationError(VersewrightError):
    """An input violated a documented precondition."""


class CheckpointError(VersewrightError):
    """Base class for checkpoint file problems."""


class CorruptCheckpointError(CheckpointError):
    """Bad magic bytes or checksum mismatch."""


class CheckpointVersionError(CheckpointError):
    """The file's format version is not supported."""


class TruncatedCheckpointError(CheckpointError):
    """The file ended before all declared content was read."""


class VocabMismatchError(ValidationError):
    """A checkpoint was combined with a tokenizer it was not trained with."""
