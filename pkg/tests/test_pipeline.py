"""Tests for the shared data pipeline."""

import numpy as np
import pytest

from brentcast.pybrentcast.config import TrainConfig
from brentcast.pybrentcast.const import ScalerScope
from brentcast.pybrentcast.exceptions import InsufficientDataError, SplitError
from brentcast.pybrentcast.lstm import init_network
from brentcast.pybrentcast.pipeline import (
    forecast_prices,
    holdout_predictions,
    prepare_data,
    write_forecast_csv,
    write_predictions_csv,
)
from brentcast.pybrentcast.preprocess import Scaler


def _with(config: TrainConfig, **changes) -> TrainConfig:
    return TrainConfig(**{**config.as_dict(), **changes})


def test_prepare_data(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, tiny_config)

    assert data.log_scale is True
    assert data.train_set.num_samples == 210 - 10
    assert data.test_set.num_samples == 90 - 10
    assert data.validation_set is data.test_set
    assert data.scaler.min == np.log(synthetic_series.values[:210]).min()
    assert data.scaler.max == np.log(synthetic_series.values[:210]).max()
    assert data.train_set.inputs.min() >= 0.0
    assert data.train_set.inputs.max() <= 1.0
    assert data.normalized.shape == (300,)


def test_full_scope_scaler(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, _with(tiny_config, scaler_scope="full"))

    assert data.normalized.min() == 0.0
    assert data.normalized.max() == pytest.approx(1.0)


def test_raw_scale(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, _with(tiny_config, log_transform=False))

    assert data.log_scale is False
    assert data.scaler.max == synthetic_series.values[:210].max()


def test_validation_tail_is_held_out(synthetic_series, tiny_config):
    plain = prepare_data(synthetic_series, tiny_config)
    data = prepare_data(synthetic_series, _with(tiny_config, validation_fraction=0.25))

    assert data.train_set.num_samples == 150
    assert data.validation_set.num_samples == 50
    np.testing.assert_array_equal(
        data.validation_set.targets, plain.train_set.targets[150:]
    )
    np.testing.assert_array_equal(data.test_set.targets, plain.test_set.targets)


def test_validation_fraction_too_small(synthetic_series, tiny_config):
    with pytest.raises(SplitError):
        prepare_data(synthetic_series, _with(tiny_config, validation_fraction=0.001))


def test_short_test_portion(synthetic_series, tiny_config):
    with pytest.raises(InsufficientDataError):
        prepare_data(synthetic_series, _with(tiny_config, window_len=95))


def test_given_scaler_is_kept(synthetic_series, tiny_config):
    scaler = Scaler(3.0, 5.0)

    data = prepare_data(synthetic_series, tiny_config, scaler=scaler)

    assert data.scaler is scaler
    np.testing.assert_allclose(
        data.normalized, (np.log(synthetic_series.values) - 3.0) / 2.0
    )


def test_holdout_predictions_are_prices(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, tiny_config)
    net = init_network(tiny_config.layer_sizes, 0.0, seed=0)

    actual, predicted = holdout_predictions(net, data)

    np.testing.assert_allclose(actual, synthetic_series.values[220:], rtol=1e-12)
    assert predicted.shape == actual.shape
    assert np.all(predicted > 0)


def test_forecast_prices(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, tiny_config)
    net = init_network(tiny_config.layer_sizes, 0.0, seed=0)

    forecast = forecast_prices(net, data, horizon=4)

    assert forecast.shape == (4,)
    assert np.all(forecast > 0)


def test_csv_writers():
    predictions = write_predictions_csv(np.array([60.0, 61.5]), np.array([59.0, 62.25]))
    forecast = write_forecast_csv(np.array([70.0, 71.0, 72.0]))

    assert predictions.splitlines() == [
        "step,actual,predicted",
        "0,60,59",
        "1,61.5,62.25",
    ]
    assert forecast.splitlines() == ["step,predicted", "1,70", "2,71", "3,72"]
