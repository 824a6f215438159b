# app/core/errors.py
from typing import Optional


class ToolkitError(Exception):
    """
    Base error for the toolkit. Every subclass carries a stable string code
    (used in the JSON error envelope) and a distinct process exit code.
    """

    code = "INTERNAL_ERROR"
    exit_code = 1
    http_status = 500

    def __init__(self, message: str, row: Optional[int] = None):
        self.message = message
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class InputFileError(ToolkitError):
    code = "MISSING_FILE"
    exit_code = 3
    http_status = 400


class MissingColumnError(ToolkitError):
    code = "MISSING_COLUMN"
    exit_code = 4
    http_status = 400


class ParseError(ToolkitError):
    code = "PARSE_ERROR"
    exit_code = 5
    http_status = 400


class LabelOutOfRange(ToolkitError):
    code = "LABEL_OUT_OF_RANGE"
    exit_code = 6
    http_status = 400


class ScoreOutOfRange(ToolkitError):
    code = "SCORE_OUT_OF_RANGE"
    exit_code = 7
    http_status = 400


class SchemaError(ToolkitError):
    code = "SCHEMA_ERROR"
    exit_code = 8
    http_status = 400


class UnknownMethod(ToolkitError):
    code = "UNKNOWN_METHOD"
    exit_code = 9
    http_status = 400


class SingleClassError(ToolkitError):
    code = "SINGLE_CLASS"
    exit_code = 10
    http_status = 400


class InvalidArgument(ToolkitError):
    code = "INVALID_ARGUMENT"
    exit_code = 11
    http_status = 400


class DimensionMismatch(ToolkitError):
    code = "DIMENSION_MISMATCH"
    exit_code = 12
    http_status = 400


class ConfigError(ToolkitError):
    code = "CONFIG_ERROR"
    exit_code = 13
    http_status = 400


class NonFiniteScore(ToolkitError):
    code = "NON_FINITE_SCORE"
    exit_code = 14
    http_status = 400


class ReplayMismatch(ToolkitError):
    code = "REPLAY_MISMATCH"
    exit_code = 15
    http_status = 500
