from typing import ClassVar


class MultiClassAucError(Exception):
    """Base class for errors raised by the multiclass AUC toolkit.

    Each subclass carries the exit code the command-line interface terminates with.
    """

    exit_code: ClassVar[int] = 1


class VerificationError(MultiClassAucError):
    """An accelerated kernel disagreed with the brute-force reference."""

    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, seed: int | None = None):
        super().__init__(message)
        self.seed = seed


class DatasetFormatError(MultiClassAucError, ValueError):
    """A dataset or model file could not be parsed, or its labels are unusable."""

    exit_code: ClassVar[int] = 2

    def __init__(self, message: str, row: int | None = None):
        super().__init__(f"Row {row}: {message}" if row is not None else message)
        self.row = row


class InvalidArgumentError(MultiClassAucError, ValueError):
    """An argument is outside the range an operation accepts."""

    exit_code: ClassVar[int] = 2


class ShapeMismatchError(MultiClassAucError, ValueError):
    """Arrays, models or datasets have incompatible dimensions."""

    exit_code: ClassVar[int] = 3


class TrainingDivergedError(MultiClassAucError, RuntimeError):
    """Training produced a non-finite risk or could not assemble a usable batch."""

    exit_code: ClassVar[int] = 4
