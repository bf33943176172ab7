#!/usr/bin/env python3
"""
Module implements min-max scaling, chronological splits and sliding windows.

The pipeline runs log transform, split, scaler fit (training portion by
default), scaling and finally windowing. Fitting on the whole series is
available for exact reproduction but lets test extrema leak into training.

:license: MIT, see LICENSE for more details.
"""

import math

import attr
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .const import DEFAULT_WINDOW_LEN
from .exceptions import (
    BrentcastConfigError,
    BrentcastShapeError,
    DegenerateScaleError,
    InsufficientDataError,
    SplitError,
)
from .utils import to_readonly_array


@attr.define(frozen=True)
class Scaler:
    """Min-max affine map fitted on a vector of values."""

    min: float = attr.field(converter=float)
    max: float = attr.field(converter=float)

    def __attrs_post_init__(self) -> None:
        if not self.max > self.min:
            raise DegenerateScaleError(
                f"Scaler needs max > min, got min={self.min} max={self.max}"
            )

    @property
    def span(self) -> float:
        """Return max - min."""
        return self.max - self.min


@attr.define(frozen=True, eq=False)
class WindowedDataset:
    """Supervised samples: each input row is followed by its target."""

    inputs: np.ndarray = attr.field(converter=to_readonly_array)
    targets: np.ndarray = attr.field(converter=to_readonly_array)
    window_len: int = attr.field(converter=int)

    def __attrs_post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[1] != self.window_len:
            raise BrentcastShapeError(
                f"Inputs of shape {self.inputs.shape} do not match window "
                f"length {self.window_len}"
            )
        if self.targets.shape != (self.inputs.shape[0],):
            raise BrentcastShapeError(
                f"{self.inputs.shape[0]} inputs but targets of shape "
                f"{self.targets.shape}"
            )

    @property
    def num_samples(self) -> int:
        """Return the number of samples."""
        return int(self.targets.shape[0])

    def __len__(self) -> int:
        return self.num_samples

    def subset(self, start: int, stop: int | None = None) -> "WindowedDataset":
        """Return samples [start, stop) as a new dataset."""
        return WindowedDataset(
            self.inputs[start:stop], self.targets[start:stop], self.window_len
        )


def fit_scaler(values: np.ndarray) -> Scaler:
    """Fit a min-max scaler on the extrema of the values."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise InsufficientDataError("Fitting a scaler needs at least two values")
    low, high = float(np.min(values)), float(np.max(values))
    if low == high:
        raise DegenerateScaleError(f"Cannot scale constant values ({low})")
    return Scaler(min=low, max=high)


def apply_scaler(
    values: np.ndarray, scaler: Scaler, inverse: bool = False
) -> np.ndarray:
    """Map values to [0, 1] (or back with inverse=True)."""
    values = np.asarray(values, dtype=np.float64)
    if inverse:
        return scaler.min + values * scaler.span
    return (values - scaler.min) / scaler.span


def split_train_test(
    values: np.ndarray, train_fraction: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split chronologically, the first floor(n * fraction) values train."""
    values = np.asarray(values, dtype=np.float64)
    if not 0.0 < train_fraction < 1.0:
        raise BrentcastConfigError(
            f"Train fraction must lie in (0, 1), got {train_fraction}"
        )
    if values.size < 2:
        raise SplitError("Splitting needs at least two values")
    cut = math.floor(values.size * train_fraction)
    if cut == 0 or cut == values.size:
        raise SplitError(
            f"Fraction {train_fraction} of {values.size} values leaves a side empty"
        )
    return values[:cut], values[cut:]


def make_windows(
    values: np.ndarray, window_len: int = DEFAULT_WINDOW_LEN
) -> WindowedDataset:
    """Build stride-1 windows of window_len values and the value after each."""
    values = np.asarray(values, dtype=np.float64)
    if window_len < 1:
        raise BrentcastConfigError(f"Window length must be >= 1, got {window_len}")
    if values.size <= window_len:
        raise InsufficientDataError(
            f"{values.size} values cannot fill a window of {window_len} plus a target"
        )
    inputs = sliding_window_view(values[:-1], window_len)
    return WindowedDataset(inputs, values[window_len:], window_len)
