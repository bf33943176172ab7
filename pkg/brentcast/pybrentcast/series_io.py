#!/usr/bin/env python3
"""
Module implements parsing, validation and export of daily price series.

:license: MIT, see LICENSE for more details.
"""

import datetime as dt
import io
import logging
from collections.abc import Iterable
from typing import TextIO

import attr
import numpy as np
import pandas as pd

from .const import DATE_FORMAT, FLOAT_FORMAT, SERIES_HEADER, ScaleKind
from .exceptions import (
    BrentcastDataError,
    BrentcastUsageError,
    DuplicateDateError,
    EmptySliceError,
    InsufficientDataError,
    ScaleMismatchError,
    SeriesDomainError,
    SeriesParseError,
)
from .utils import to_readonly_array

_LOGGER = logging.getLogger(__name__)


def _convert_dates(values: Iterable[dt.date]) -> tuple[dt.date, ...]:
    return tuple(
        value.date() if isinstance(value, dt.datetime) else value for value in values
    )


@attr.define(frozen=True, eq=False)
class PriceSeries:
    """Ordered (date, value) observations on a raw or log price scale."""

    dates: tuple[dt.date, ...] = attr.field(converter=_convert_dates)
    values: np.ndarray = attr.field(converter=to_readonly_array)
    scale_kind: ScaleKind = attr.field(default=ScaleKind.RAW, converter=ScaleKind)

    def __attrs_post_init__(self) -> None:
        """Check the series invariants."""
        if len(self.dates) == 0:
            raise InsufficientDataError("A price series needs at least one observation")
        if self.values.shape != (len(self.dates),):
            raise BrentcastDataError(
                f"{len(self.dates)} dates but values of shape {self.values.shape}"
            )
        for previous, current in zip(self.dates, self.dates[1:]):
            if current == previous:
                raise DuplicateDateError(f"Duplicate date {current.isoformat()}")
            if current < previous:
                raise BrentcastDataError(
                    f"Dates not increasing at {current.isoformat()}"
                )
        if not np.all(np.isfinite(self.values)):
            raise SeriesDomainError("Series values must be finite")
        if self.scale_kind is ScaleKind.RAW and np.any(self.values <= 0):
            raise SeriesDomainError("Raw prices must be strictly positive")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def observations(self) -> list[tuple[dt.date, float]]:
        """Return the observations as (date, value) pairs."""
        return list(zip(self.dates, self.values.tolist()))

    def to_pandas(self) -> pd.Series:
        """Return the series as a pandas Series indexed by timestamp."""
        return pd.Series(
            self.values, index=pd.DatetimeIndex(self.dates), name=SERIES_HEADER[1]
        )


def series_from_values(
    dates: Iterable[dt.date | str],
    values: Iterable[float],
    scale_kind: ScaleKind = ScaleKind.RAW,
) -> PriceSeries:
    """Build a series from dates (or ISO strings) and values, sorted by date."""
    parsed = [
        dt.date.fromisoformat(date) if isinstance(date, str) else date for date in dates
    ]
    array = np.asarray(list(values), dtype=np.float64)
    if array.shape != (len(parsed),):
        raise BrentcastDataError(f"{len(parsed)} dates but {array.size} values")
    order = sorted(range(len(parsed)), key=parsed.__getitem__)
    return PriceSeries(
        dates=[parsed[i] for i in order], values=array[order], scale_kind=scale_kind
    )


def parse_price_csv(text: str | TextIO) -> PriceSeries:
    """Parse a `date,price` CSV into a raw series sorted by date."""
    if not isinstance(text, str):
        text = text.read()
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as err:
        raise SeriesParseError("missing header", row=0) from err
    except pd.errors.ParserError as err:
        raise SeriesParseError(str(err), row=None) from err

    # physical line numbers of the header and of every data row
    lines = text.splitlines()
    content = [number for number, line in enumerate(lines, start=1) if line.strip()]
    if len(content) < len(lines):
        _LOGGER.warning("Skipped %d blank lines", len(lines) - len(content))

    def line_of(row: int) -> int | None:
        return content[row] if row < len(content) else None

    header = tuple(str(column).strip() for column in frame.columns)
    if header != SERIES_HEADER:
        raise SeriesParseError(
            f"expected header {','.join(SERIES_HEADER)}, got {','.join(header)}",
            row=0,
            line=line_of(0),
        )
    if frame.empty:
        raise InsufficientDataError("CSV contains a header but no rows")

    raw_dates = frame["date"].fillna("").str.strip()
    raw_prices = frame["price"].fillna("").str.strip()
    dates = pd.to_datetime(raw_dates, format=DATE_FORMAT, errors="coerce")
    prices = pd.to_numeric(raw_prices, errors="coerce")

    for row, (date, price) in enumerate(zip(dates, prices), start=1):
        if pd.isna(date):
            raise SeriesParseError(
                f"malformed date {raw_dates.iloc[row - 1]!r}", row, line_of(row)
            )
        if pd.isna(price) or not np.isfinite(price):
            raise SeriesParseError(
                f"non-numeric price {raw_prices.iloc[row - 1]!r}", row, line_of(row)
            )
        if price <= 0:
            raise SeriesDomainError(
                f"data row {row} (line {line_of(row)}): non-positive price {price}"
            )

    duplicated = dates[dates.duplicated()]
    if not duplicated.empty:
        raise DuplicateDateError(
            f"Duplicate date {duplicated.iloc[0].date().isoformat()}"
        )

    order = np.argsort(dates.to_numpy(), kind="stable")
    _LOGGER.debug("Parsed %d price rows", len(order))
    return PriceSeries(
        dates=[dates.iloc[i].date() for i in order],
        values=prices.to_numpy(dtype=np.float64)[order],
        scale_kind=ScaleKind.RAW,
    )


def slice_date_range(series: PriceSeries, start: dt.date, end: dt.date) -> PriceSeries:
    """Return the observations with start <= date <= end."""
    if start > end:
        raise BrentcastUsageError(f"Slice start {start} is after end {end}")
    keep = [i for i, date in enumerate(series.dates) if start <= date <= end]
    if not keep:
        raise EmptySliceError(f"No observations between {start} and {end}")
    return PriceSeries(
        dates=[series.dates[i] for i in keep],
        values=series.values[keep],
        scale_kind=series.scale_kind,
    )


def resample_monthly(series: PriceSeries) -> PriceSeries:
    """Average each calendar month, dated on the first of the month."""
    frame = series.to_pandas()
    monthly = frame.groupby(frame.index.to_period("M")).mean()
    return PriceSeries(
        dates=[period.start_time.date() for period in monthly.index],
        values=monthly.to_numpy(dtype=np.float64),
        scale_kind=series.scale_kind,
    )


def log_transform(series: PriceSeries, inverse: bool = False) -> PriceSeries:
    """Map values to natural log (or back with inverse=True)."""
    expected = ScaleKind.LOG if inverse else ScaleKind.RAW
    if series.scale_kind is not expected:
        raise ScaleMismatchError(
            f"{'Inverse' if inverse else 'Forward'} log transform expects a "
            f"{expected.value} series, got {series.scale_kind.value}"
        )
    if inverse:
        return PriceSeries(series.dates, np.exp(series.values), ScaleKind.RAW)
    return PriceSeries(series.dates, np.log(series.values), ScaleKind.LOG)


def write_series_csv(series: PriceSeries) -> str:
    """Render a series in the format parse_price_csv reads."""
    if len(series) == 0:
        raise BrentcastUsageError("Cannot write an empty series")
    frame = pd.DataFrame(
        {
            SERIES_HEADER[0]: [date.isoformat() for date in series.dates],
            SERIES_HEADER[1]: series.values,
        }
    )
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
