"""
Module implements the utilities shared by the forecasting library.

:license: MIT, see LICENSE for more details.
"""

from collections.abc import Iterable, Sequence

import numpy as np

from .exceptions import BrentcastConfigError


def to_readonly_array(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """Convert values to a write-protected float64 array (copying)."""
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


def convert_layer_sizes(value: str | Sequence[int]) -> tuple[int, ...]:
    """Convert "60,60,60" or a sequence of counts to a tuple of ints."""
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
    else:
        parts = list(value)
    try:
        sizes = tuple(int(part) for part in parts)
    except (TypeError, ValueError) as err:
        raise BrentcastConfigError(f"Invalid layer sizes: {value!r}") from err
    if not sizes:
        raise BrentcastConfigError("At least one layer size is required")
    return sizes


def format_float(value: float) -> str:
    """Return the shortest decimal that reads back to the same double."""
    return repr(float(value))


def relative_error(
    analytic: np.ndarray, numeric: np.ndarray, floor: float
) -> np.ndarray:
    """Elementwise |a - n| / max(|a|, |n|, floor)."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def substream(seed: int, *key: int) -> np.random.Generator:
    """
    Return a counter-based generator for the substream (seed, *key).

    The stream depends only on the seed and the key, never on how many
    other substreams were created before it.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))
