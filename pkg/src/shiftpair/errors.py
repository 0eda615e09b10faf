"""Exception hierarchy. Every domain error carries a stable short code."""

from __future__ import annotations


class ShiftpairError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "ERROR"


class OutOfBoundsError(ShiftpairError):
    code = "OUT_OF_BOUNDS"


class OverlapError(ShiftpairError):
    code = "OVERLAP"


class IllegalActionError(ShiftpairError):
    code = "ILLEGAL_ACTION"


class StepCapExceededError(ShiftpairError):
    code = "STEP_CAP_EXCEEDED"


class ParseError(ShiftpairError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)
        self.line = line
        self.column = column


class NoncontiguousError(ShiftpairError):
    code = "NONCONTIGUOUS"


class MixedSplitsError(ShiftpairError):
    code = "MIXED_SPLITS"


class DimMismatchError(ShiftpairError):
    code = "DIM_MISMATCH"


class MissingVectorError(ShiftpairError):
    code = "MISSING_VECTOR"


class ZeroVectorEmbeddingError(ShiftpairError):
    code = "ZERO_VECTOR_EMBEDDING"


class EmptyCorpusError(ShiftpairError):
    code = "EMPTY_CORPUS"


class IdMismatchError(ShiftpairError):
    code = "ID_MISMATCH"


class CheckpointError(ShiftpairError):
    code = "CHECKPOINT"
