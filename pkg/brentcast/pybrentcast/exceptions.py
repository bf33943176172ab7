#!/usr/bin/env python3
"""
Module implements the exception classes for the forecasting library.

:license: MIT, see LICENSE for more details.
"""


class BrentcastError(Exception):
    """Define an error for the forecasting library."""


class BrentcastDataError(BrentcastError):
    """Define an error for input data that cannot be used."""


class SeriesParseError(BrentcastDataError):
    """
    Define an error for a malformed CSV row.

    Row 0 is the header and data rows count from 1 without blank lines; line
    is the physical line of the text. Errors without a known row carry None.
    """

    def __init__(self, message: str, row: int | None, line: int | None = None) -> None:
        if row is None:
            super().__init__(message)
        else:
            where = "header" if row == 0 else f"data row {row}"
            if line is not None:
                where = f"{where} (line {line})"
            super().__init__(f"{where}: {message}")
        self.row = row
        self.line = line


class DuplicateDateError(BrentcastDataError):
    """Define an error for a date that appears twice in a series."""


class SeriesDomainError(BrentcastDataError):
    """Define an error for values outside the domain of the series scale."""


class ScaleMismatchError(BrentcastDataError):
    """Define an error for a transform applied to the wrong scale."""


class EmptySliceError(BrentcastDataError):
    """Define an error for a date range that selects nothing."""


class DegenerateScaleError(BrentcastDataError):
    """Define an error for a scaler fitted on constant values."""


class SplitError(BrentcastDataError):
    """Define an error for a split that leaves one side empty."""


class InsufficientDataError(BrentcastDataError):
    """Define an error for a series too short for the requested window."""


class CalibrationError(BrentcastDataError):
    """Define an error for a series too short to calibrate a model."""


class BrentcastShapeError(BrentcastError):
    """Define an error for arrays with inconsistent dimensions."""


class BrentcastConfigError(BrentcastError):
    """Define an error for invalid configuration values."""


class BrentcastUsageError(BrentcastError):
    """Define an error for an operation called outside its contract."""


class BrentcastNumericError(BrentcastError):
    """Define an error for numerical failures."""


class DivergenceError(BrentcastNumericError):
    """Define an error for a training loss that stopped being finite."""

    def __init__(self, epoch: int, loss: float) -> None:
        super().__init__(f"Training diverged at epoch {epoch}: loss {loss}")
        self.epoch = epoch
        self.loss = loss


class CheckpointError(BrentcastError):
    """Define an error for an unreadable checkpoint."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"line {offset}: {message}")
        self.offset = offset


class CheckpointVersionError(CheckpointError):
    """Define an error for a checkpoint written by an unknown format version."""
