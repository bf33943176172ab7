#!/usr/bin/env python3
"""
Module implements the data pipeline shared by training, evaluation and export.

:license: MIT, see LICENSE for more details.
"""

import logging
import math

import attr
import numpy as np
import pandas as pd

from .config import TrainConfig
from .const import FLOAT_FORMAT, FORECAST_HEADER, PREDICTIONS_HEADER, ScalerScope
from .exceptions import SplitError
from .lstm import StackedLstm
from .preprocess import (
    Scaler,
    WindowedDataset,
    apply_scaler,
    fit_scaler,
    make_windows,
    split_train_test,
)
from .series_io import PriceSeries, log_transform
from .train import forecast_recursive, predict_batch, to_prices

_LOGGER = logging.getLogger(__name__)


@attr.define(frozen=True, eq=False)
class PreparedData:
    """Scaled windows of one series plus what is needed to undo the scaling."""

    scaler: Scaler
    log_scale: bool
    normalized: np.ndarray
    train_set: WindowedDataset
    validation_set: WindowedDataset
    test_set: WindowedDataset


def prepare_data(
    series: PriceSeries, config: TrainConfig, scaler: Scaler | None = None
) -> PreparedData:
    """
    Log transform, split, fit the scaler, scale and window a series.

    A given scaler (e.g. from a checkpoint) is used as is instead of fitting.
    """
    values = log_transform(series).values if config.log_transform else series.values
    train_values, test_values = split_train_test(values, config.train_fraction)
    if scaler is None:
        fitted_on = train_values if config.scaler_scope is ScalerScope.TRAIN else values
        scaler = fit_scaler(fitted_on)
    train_set = make_windows(apply_scaler(train_values, scaler), config.window_len)
    test_set = make_windows(apply_scaler(test_values, scaler), config.window_len)

    validation_set = test_set
    if config.validation_fraction > 0:
        held_out = math.floor(train_set.num_samples * config.validation_fraction)
        if held_out < 1 or held_out >= train_set.num_samples:
            raise SplitError(
                f"Validation fraction {config.validation_fraction} of "
                f"{train_set.num_samples} windows leaves a side empty"
            )
        cut = train_set.num_samples - held_out
        validation_set = train_set.subset(cut)
        train_set = train_set.subset(0, cut)

    _LOGGER.debug(
        "Prepared %d train, %d validation, %d test windows of %d",
        train_set.num_samples,
        validation_set.num_samples,
        test_set.num_samples,
        config.window_len,
    )
    return PreparedData(
        scaler=scaler,
        log_scale=config.log_transform,
        normalized=apply_scaler(values, scaler),
        train_set=train_set,
        validation_set=validation_set,
        test_set=test_set,
    )


def holdout_predictions(
    net: StackedLstm, data: PreparedData
) -> tuple[np.ndarray, np.ndarray]:
    """Return (actual, predicted) test-set prices in USD/barrel."""
    predicted = predict_batch(net, data.test_set.inputs)
    return (
        to_prices(data.test_set.targets, data.scaler, data.log_scale),
        to_prices(predicted, data.scaler, data.log_scale),
    )


def forecast_prices(net: StackedLstm, data: PreparedData, horizon: int) -> np.ndarray:
    """Recursively forecast prices after the last observation."""
    window_len = data.test_set.window_len
    normalized = forecast_recursive(
        net, data.normalized[-window_len:], horizon, window_len
    )
    return to_prices(normalized, data.scaler, data.log_scale)


def write_predictions_csv(actual: np.ndarray, predicted: np.ndarray) -> str:
    """Render `step,actual,predicted` CSV."""
    frame = pd.DataFrame(
        {
            PREDICTIONS_HEADER[0]: np.arange(len(actual)),
            PREDICTIONS_HEADER[1]: actual,
            PREDICTIONS_HEADER[2]: predicted,
        }
    )
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_forecast_csv(predicted: np.ndarray) -> str:
    """Render `step,predicted` CSV, step 1 being the day after the data."""
    frame = pd.DataFrame(
        {
            FORECAST_HEADER[0]: np.arange(1, len(predicted) + 1),
            FORECAST_HEADER[1]: predicted,
        }
    )
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
