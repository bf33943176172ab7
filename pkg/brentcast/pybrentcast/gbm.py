#!/usr/bin/env python3
"""
Module implements geometric Brownian motion calibration and path simulation.

:license: MIT, see LICENSE for more details.
"""

import datetime as dt
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import attr
import numpy as np
import pandas as pd

from .const import (
    DEFAULT_GBM_DT,
    DEFAULT_GBM_HORIZON,
    DEFAULT_NUM_PATHS,
    FLOAT_FORMAT,
    MIN_CALIBRATION_POINTS,
    ZERO_SPREAD_ULPS,
    ScaleKind,
)
from .exceptions import (
    BrentcastConfigError,
    BrentcastUsageError,
    CalibrationError,
    ScaleMismatchError,
)
from .series_io import PriceSeries
from .utils import substream, to_readonly_array

_LOGGER = logging.getLogger(__name__)


def _non_negative(
    instance: "GbmModel", attribute: attr.Attribute, value: float
) -> None:
    if not value >= 0:
        raise BrentcastConfigError(f"{attribute.name} must be >= 0, got {value}")


def _positive(instance: "GbmModel", attribute: attr.Attribute, value: float) -> None:
    if not value > 0:
        raise BrentcastConfigError(f"{attribute.name} must be > 0, got {value}")


@attr.define(frozen=True)
class GbmModel:
    """dS = mu S dt + sigma S dW, started at s0 and stepped by dt."""

    mu: float = attr.field(converter=float)
    sigma: float = attr.field(converter=float, validator=_non_negative)
    s0: float = attr.field(converter=float, validator=_positive)
    dt: float = attr.field(converter=float, default=DEFAULT_GBM_DT, validator=_positive)

    def expected_price(self, steps: np.ndarray) -> np.ndarray:
        """Return E[S] after the given numbers of steps."""
        return self.s0 * np.exp(self.mu * self.dt * np.asarray(steps, dtype=np.float64))


@attr.define(frozen=True, eq=False)
class PathMatrix:
    """Simulated prices, one row per path, column 0 the start price."""

    paths: np.ndarray = attr.field(converter=to_readonly_array)

    @property
    def num_paths(self) -> int:
        """Return the number of paths."""
        return int(self.paths.shape[0])

    @property
    def horizon(self) -> int:
        """Return the number of simulated steps."""
        return int(self.paths.shape[1]) - 1


def estimate_gbm(series: PriceSeries, dt: float = DEFAULT_GBM_DT) -> GbmModel:
    """
    Calibrate from log returns r: sigma = std(r, ddof=1) / sqrt(dt),
    mu = mean(r) / dt + sigma^2 / 2, anchored at the last price.
    """
    if series.scale_kind is not ScaleKind.RAW:
        raise ScaleMismatchError("Calibration needs a raw price series")
    if len(series) < MIN_CALIBRATION_POINTS:
        raise CalibrationError(
            f"Calibration needs at least {MIN_CALIBRATION_POINTS} prices, "
            f"got {len(series)}"
        )
    if not dt > 0:
        raise BrentcastConfigError(f"dt must be > 0, got {dt}")
    log_prices = np.log(series.values)
    returns = np.diff(log_prices)
    # returns equal up to rounding of the log prices carry no volatility
    tolerance = ZERO_SPREAD_ULPS * np.finfo(np.float64).eps * max(
        1.0, float(np.max(np.abs(log_prices)))
    )
    if float(np.ptp(returns)) <= tolerance:
        sigma = 0.0
    else:
        sigma = float(np.std(returns, ddof=1)) / math.sqrt(dt)
    mu = float(np.mean(returns)) / dt + 0.5 * sigma**2
    model = GbmModel(mu=mu, sigma=sigma, s0=float(series.values[-1]), dt=dt)
    _LOGGER.debug("Calibrated %s from %d returns", model, returns.size)
    return model


def _simulate_path(model: GbmModel, horizon: int, seed: int, path: int) -> np.ndarray:
    shocks = substream(seed, path).standard_normal(horizon)
    increments = (model.mu - 0.5 * model.sigma**2) * model.dt + model.sigma * math.sqrt(
        model.dt
    ) * shocks
    log_path = np.concatenate(([0.0], np.cumsum(increments)))
    return model.s0 * np.exp(log_path)


def simulate_paths(
    model: GbmModel,
    horizon: int = DEFAULT_GBM_HORIZON,
    num_paths: int = DEFAULT_NUM_PATHS,
    seed: int = 0,
    workers: int = 1,
) -> PathMatrix:
    """
    Simulate paths with the exact log-normal step.

    Path p draws from its own substream (seed, p), so the matrix does not
    depend on the number of workers.
    """
    if horizon < 1 or num_paths < 1:
        raise BrentcastUsageError(
            f"Simulation needs horizon >= 1 and paths >= 1, got {horizon}, {num_paths}"
        )
    if workers < 1:
        raise BrentcastConfigError(f"workers must be >= 1, got {workers}")
    paths = np.empty((num_paths, horizon + 1))
    if workers == 1:
        for path in range(num_paths):
            paths[path] = _simulate_path(model, horizon, seed, path)
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = executor.map(
                lambda path: _simulate_path(model, horizon, seed, path),
                range(num_paths),
            )
            for path, row in enumerate(rows):
                paths[path] = row
    _LOGGER.debug("Simulated %d paths of %d steps", num_paths, horizon)
    return PathMatrix(paths)


def mean_path(paths: PathMatrix) -> np.ndarray:
    """Return the per-step mean across paths."""
    if paths.num_paths < 1:
        raise BrentcastUsageError("Mean path needs at least one path")
    return paths.paths.mean(axis=0)


def write_paths_csv(paths: PathMatrix) -> str:
    """Render `step,path_0,...,path_{n-1},mean` CSV, one row per step."""
    columns = {"step": np.arange(paths.horizon + 1)}
    columns.update({f"path_{p}": paths.paths[p] for p in range(paths.num_paths)})
    columns["mean"] = mean_path(paths)
    return pd.DataFrame(columns).to_csv(
        index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def synthetic_brent_series(
    length: int,
    start: dt.date = dt.date(2018, 1, 1),
    seed: int = 0,
    s0: float = 65.0,
    mu: float = 0.05,
    sigma: float = 0.3,
) -> PriceSeries:
    """Return a seeded GBM price series on business days."""
    if length < 1:
        raise BrentcastUsageError(f"Series length must be >= 1, got {length}")
    model = GbmModel(mu=mu, sigma=sigma, s0=s0, dt=DEFAULT_GBM_DT)
    prices = _simulate_path(model, length - 1, seed, 0)
    dates = pd.bdate_range(start=start, periods=length)
    return PriceSeries(dates=[stamp.date() for stamp in dates], values=prices)
