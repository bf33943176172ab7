"""Tests for the optimiser, scheduler, training loop and metrics."""

import datetime as dt
import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brentcast.pybrentcast.config import TrainConfig
from brentcast.pybrentcast.exceptions import (
    BrentcastShapeError,
    BrentcastUsageError,
    DivergenceError,
)
from brentcast.pybrentcast.lstm import StackedLstm, init_network
from brentcast.pybrentcast.pipeline import prepare_data
from brentcast.pybrentcast.preprocess import Scaler, WindowedDataset, make_windows
from brentcast.pybrentcast.series_io import series_from_values
from brentcast.pybrentcast.train import (
    AdamState,
    Metrics,
    PlateauState,
    TrainLog,
    _clip,
    adam_step,
    evaluate,
    fit,
    forecast_recursive,
    mse_loss,
    persistence_baseline,
    plateau_step,
    predict_batch,
    predict_one_step,
    price_metrics,
    to_prices,
    write_train_log_csv,
)
from brentcast.pybrentcast.utils import substream


def test_mse_loss():
    assert mse_loss(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 2.0
    assert mse_loss(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 5.0])) == 5.0 / 3.0
    with pytest.raises(BrentcastShapeError):
        mse_loss(np.zeros(2), np.zeros(3))
    with pytest.raises(BrentcastShapeError):
        mse_loss(np.zeros(0), np.zeros(0))


def test_adam_first_step_moves_by_the_learning_rate():
    config = TrainConfig()
    params = np.zeros(2)
    grads = np.array([2.0, -3.0])

    updated, state = adam_step(params, grads, AdamState.fresh(2, 0.1), config)

    np.testing.assert_allclose(updated, [-0.1, 0.1], rtol=1e-6)
    assert state.t == 1
    assert state.learning_rate == 0.1
    np.testing.assert_array_equal(params, np.zeros(2))
    np.testing.assert_array_equal(grads, [2.0, -3.0])


def test_adam_two_steps_with_a_constant_gradient():
    config = TrainConfig()
    grads = np.array([2.0])

    first, state = adam_step(np.array([1.0]), grads, AdamState.fresh(1, 0.1), config)
    second, state = adam_step(first, grads, state, config)

    # m: 0.2, 0.38 and v: 0.004, 0.007996; both steps see m_hat 2, v_hat 4
    step = 0.1 * 2.0 / (2.0 + 1e-8)
    assert first[0] == pytest.approx(1.0 - step, rel=1e-12)
    assert second[0] == pytest.approx(1.0 - 2.0 * step, rel=1e-12)
    assert state.m[0] == pytest.approx(0.38, rel=1e-12)
    assert state.v[0] == pytest.approx(0.007996, rel=1e-12)
    assert state.t == 2


def test_adam_zero_gradient_keeps_parameters():
    params = np.array([0.5, -1.5, 3.0])

    updated, state = adam_step(
        params, np.zeros(3), AdamState.fresh(3, 0.01), TrainConfig()
    )

    np.testing.assert_array_equal(updated, params)
    assert state.t == 1


def test_adam_shape_mismatch():
    with pytest.raises(BrentcastShapeError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.fresh(2, 0.1), TrainConfig())


def test_plateau_reduces_when_patience_is_reached():
    config = TrainConfig(plateau_patience=2, plateau_factor=0.5, plateau_min_delta=0.0)
    state = PlateauState(1e-3)

    state = plateau_step(state, 1.0, config)
    state = plateau_step(state, 0.9, config)
    assert (state.learning_rate, state.best, state.counter) == (1e-3, 0.9, 0)
    state = plateau_step(state, 0.95, config)
    assert (state.learning_rate, state.counter) == (1e-3, 1)
    state = plateau_step(state, 0.92, config)
    assert state.learning_rate == pytest.approx(5e-4)
    assert state.counter == 0
    assert state.best == 0.9


def test_plateau_halves_after_three_stalled_epochs():
    config = TrainConfig()
    state = PlateauState(1e-3)

    rates = []
    for loss in (1.0, 1.1, 1.1, 1.1):
        state = plateau_step(state, loss, config)
        rates.append(state.learning_rate)

    assert rates == [1e-3, 1e-3, 1e-3, 5e-4]
    assert state.best == 1.0


def test_plateau_respects_the_floor_and_min_delta():
    config = TrainConfig(
        plateau_patience=1,
        plateau_factor=0.1,
        plateau_min_delta=0.01,
        min_learning_rate=5e-4,
    )
    state = plateau_step(PlateauState(1e-3, best=1.0), 0.995, config)

    assert state.learning_rate == 5e-4
    assert state.best == 1.0
    state = plateau_step(state, 0.5, config)
    assert state.learning_rate == 5e-4
    assert state.best == 0.5
    with pytest.raises(BrentcastUsageError):
        plateau_step(state, math.nan, config)


def test_clip():
    grads = np.array([3.0, 4.0])

    np.testing.assert_allclose(_clip(grads, 1.0), [0.6, 0.8])
    np.testing.assert_array_equal(_clip(grads, 10.0), grads)
    np.testing.assert_array_equal(_clip(grads, None), grads)


def test_fit_is_deterministic(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, tiny_config)

    net, adam, log = fit(data.train_set, data.validation_set, tiny_config)
    again, _, _ = fit(data.train_set, data.validation_set, tiny_config)

    np.testing.assert_array_equal(net.flatten(), again.flatten())
    assert len(log) == tiny_config.epochs
    assert [record.epoch for record in log.records] == [1, 2]
    assert log[0].learning_rate == tiny_config.learning_rate
    assert adam.t > 0


def test_fit_with_dropout_and_clipping(synthetic_series, tiny_config):
    config = TrainConfig(
        **{**tiny_config.as_dict(), "dropout_rate": 0.3, "clip_norm": 0.5}
    )
    data = prepare_data(synthetic_series, config)

    net, _, log = fit(data.train_set, data.validation_set, config)

    assert net.dropout_rate == 0.3
    assert np.all(np.isfinite(net.flatten()))
    assert all(math.isfinite(record.train_loss) for record in log.records)


def test_fit_rejects_mismatched_windows(synthetic_series, tiny_config):
    data = prepare_data(synthetic_series, tiny_config)
    config = TrainConfig(**{**tiny_config.as_dict(), "window_len": 12})

    with pytest.raises(BrentcastShapeError):
        fit(data.train_set, data.validation_set, config)


def test_fit_reports_divergence(tiny_config, caplog):
    dataset = make_windows(np.append(np.linspace(0.0, 1.0, 20), 1e200), 10)

    with caplog.at_level(logging.WARNING), pytest.raises(DivergenceError) as err:
        fit(dataset, dataset, tiny_config)
    assert err.value.epoch == 1
    assert "epoch 1" in caplog.text


@pytest.mark.slow
def test_learns_a_sine_better_than_persistence():
    steps = np.arange(400)
    series = series_from_values(
        [dt.date(2000, 1, 3) + dt.timedelta(days=int(i)) for i in steps],
        2.0 + np.sin(2.0 * np.pi * steps / 10.0),
    )
    config = TrainConfig(
        epochs=30,
        batch_size=16,
        learning_rate=0.01,
        window_len=16,
        layer_sizes=(16, 16),
        dropout_rate=0.0,
        log_transform=False,
        seed=0,
    )
    data = prepare_data(series, config)

    net, _, log = fit(data.train_set, data.validation_set, config)

    model = evaluate(net, data.test_set, data.scaler, data.log_scale)
    baseline = persistence_baseline(data.test_set, data.scaler, data.log_scale)
    assert model.rmse < baseline.rmse
    best = [record.best_validation_loss for record in log.records]
    assert all(later <= earlier for earlier, later in zip(best, best[1:]))
    assert min(r.validation_loss for r in log.records) < log[0].validation_loss


def test_train_log_csv():
    config = TrainConfig(epochs=3, window_len=4, layer_sizes=(2,), dropout_rate=0.0)
    dataset = make_windows(np.linspace(0.0, 1.0, 20), 4)

    _, _, log = fit(dataset, dataset, config)
    lines = write_train_log_csv(log).splitlines()

    assert len(lines) == 4
    assert lines[0] == "epoch,train_loss,val_loss,lr"
    assert lines[1].startswith("1,")
    assert len(TrainLog()) == 0


def test_forecast_feeds_predictions_back():
    net = init_network((3,), 0.0, seed=8)
    window = np.linspace(0.2, 0.8, 5)

    forecasts = forecast_recursive(net, window, 3, window_len=5)

    assert forecasts.shape == (3,)
    assert forecasts[0] == predict_one_step(net, window, 5)
    second_window = np.append(window[1:], forecasts[0])
    assert forecasts[1] == predict_one_step(net, second_window, 5)
    third_window = np.append(second_window[1:], forecasts[1])
    assert forecasts[2] == predict_one_step(net, third_window, 5)
    with pytest.raises(BrentcastUsageError):
        forecast_recursive(net, window, 0, window_len=5)


def test_windows_must_match_the_trained_length():
    net = init_network((3,), 0.0, seed=0)

    with pytest.raises(BrentcastShapeError):
        predict_one_step(net, np.linspace(0.0, 1.0, 7), window_len=5)
    with pytest.raises(BrentcastShapeError):
        forecast_recursive(net, np.linspace(0.0, 1.0, 7), 2, window_len=5)


def test_zero_network_forecasts_its_head_bias():
    net = StackedLstm.zeros((2,))

    assert predict_one_step(net, np.linspace(0.0, 1.0, 4), 4) == 0.0
    np.testing.assert_array_equal(
        forecast_recursive(net, np.linspace(0.0, 1.0, 4), 6, 4), np.zeros(6)
    )


def test_price_metrics():
    metrics = price_metrics(np.array([2.0, 3.0]), np.array([3.0, 5.0]))

    assert metrics.mae == 1.5
    assert metrics.rmse == pytest.approx(math.sqrt(2.5))
    with pytest.raises(BrentcastUsageError):
        price_metrics(np.zeros(0), np.zeros(0))


def test_evaluate_perfect_predictions():
    net = init_network((3,), 0.0, seed=2)
    inputs = substream(2, 5).random((6, 4))
    dataset = WindowedDataset(inputs, predict_batch(net, inputs), 4)

    metrics = evaluate(net, dataset, Scaler(math.log(40.0), math.log(90.0)), True)

    assert metrics == Metrics(mae=0.0, rmse=0.0)
    with pytest.raises(BrentcastUsageError):
        evaluate(net, dataset.subset(0, 0), Scaler(0.0, 1.0), False)


def test_evaluate_denormalizes_before_measuring():
    net = StackedLstm.zeros((2,))
    dataset = WindowedDataset(np.zeros((2, 3)), np.array([0.1, 0.2]), 3)

    metrics = evaluate(net, dataset, Scaler(10.0, 20.0), log_scale=False)

    assert metrics.mae == pytest.approx(1.5, rel=1e-12)
    assert metrics.rmse == pytest.approx(math.sqrt(2.5), rel=1e-12)


@given(
    st.lists(
        st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
        min_size=1,
        max_size=30,
    )
)
def test_evaluate_rmse_is_at_least_mae(targets):
    net = StackedLstm.zeros((2,))
    dataset = WindowedDataset(np.zeros((len(targets), 3)), np.array(targets), 3)

    metrics = evaluate(net, dataset, Scaler(50.0, 80.0), log_scale=False)

    assert metrics.rmse >= metrics.mae * (1.0 - 1e-12)


def test_persistence_baseline_uses_the_last_input():
    dataset = make_windows(np.array([1.0, 2.0, 3.0, 5.0]), 2)

    metrics = persistence_baseline(dataset, Scaler(0.0, 1.0), log_scale=False)

    assert metrics.mae == 1.5
    assert metrics.rmse == pytest.approx(math.sqrt(2.5))


def test_to_prices_undoes_scaling_and_log():
    scaler = Scaler(math.log(50.0), math.log(100.0))

    np.testing.assert_allclose(
        to_prices(np.array([0.0, 1.0]), scaler, log_scale=True), [50.0, 100.0]
    )
    np.testing.assert_allclose(
        to_prices(np.array([0.5]), Scaler(10.0, 20.0), log_scale=False), [15.0]
    )
