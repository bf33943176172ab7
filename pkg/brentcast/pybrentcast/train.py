#!/usr/bin/env python3
"""
Module implements training, prediction and evaluation of the LSTM regressor.

Loss is mean squared error on normalized values. Mini-batches are drawn in
a seeded shuffle each epoch, per-sample gradients are averaged over the
batch, and Adam updates the parameters. After every epoch the learning rate
scheduler watches the validation loss and reduces the rate on plateaus.

:license: MIT, see LICENSE for more details.
"""

import logging
import math

import attr
import numpy as np
import pandas as pd

from .config import TrainConfig
from .const import FLOAT_FORMAT, TRAIN_LOG_HEADER
from .exceptions import (
    BrentcastShapeError,
    BrentcastUsageError,
    DivergenceError,
)
from .lstm import (
    StackedLstm,
    backward_batch,
    forward_batch,
    forward_sequence,
    init_network,
)
from .preprocess import Scaler, WindowedDataset, apply_scaler
from .utils import substream

_LOGGER = logging.getLogger(__name__)

# Substream keys derived from the training seed
_SHUFFLE_STREAM = 1
_DROPOUT_STREAM = 2


def mse_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Return the mean of squared differences."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.size == 0:
        raise BrentcastShapeError(
            f"Cannot compare predictions {predictions.shape} "
            f"with targets {targets.shape}"
        )
    return float(np.mean((predictions - targets) ** 2))


@attr.define(frozen=True, eq=False)
class AdamState:
    """Adam moments, step counter and the current learning rate."""

    m: np.ndarray
    v: np.ndarray
    t: int = attr.field(converter=int, default=0)
    learning_rate: float = attr.field(converter=float, default=0.0)

    def __attrs_post_init__(self) -> None:
        if self.m.shape != self.v.shape:
            raise BrentcastShapeError(
                f"Moment shapes differ: m{self.m.shape} v{self.v.shape}"
            )
        if self.t < 0:
            raise BrentcastUsageError(f"Step counter must be >= 0, got {self.t}")

    @classmethod
    def fresh(cls, num_parameters: int, learning_rate: float) -> "AdamState":
        """Return zero moments for a parameter vector of the given size."""
        return cls(np.zeros(num_parameters), np.zeros(num_parameters), 0, learning_rate)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    config: TrainConfig,
) -> tuple[np.ndarray, AdamState]:
    """Apply one bias-corrected Adam update; inputs are left untouched."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise BrentcastShapeError(
            f"Adam got params{params.shape} grads{grads.shape} state{state.m.shape}"
        )
    beta1, beta2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads**2
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    step = state.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    updated = params - step
    return updated, AdamState(m, v, t, state.learning_rate)


@attr.define(frozen=True)
class PlateauState:
    """Reduce-on-plateau bookkeeping."""

    learning_rate: float = attr.field(converter=float)
    best: float = attr.field(converter=float, default=math.inf)
    counter: int = attr.field(converter=int, default=0)


def plateau_step(
    state: PlateauState, validation_loss: float, config: TrainConfig
) -> PlateauState:
    """
    Record one validation loss and reduce the rate once the loss has failed
    to improve by more than min_delta for `patience` consecutive epochs.
    """
    if not math.isfinite(validation_loss):
        raise BrentcastUsageError(
            f"Validation loss must be finite, got {validation_loss}"
        )
    if validation_loss < state.best - config.plateau_min_delta:
        return PlateauState(state.learning_rate, validation_loss, 0)
    counter = state.counter + 1
    if counter < config.plateau_patience:
        return PlateauState(state.learning_rate, state.best, counter)
    reduced = max(state.learning_rate * config.plateau_factor, config.min_learning_rate)
    if reduced < state.learning_rate:
        _LOGGER.info(
            "Validation loss stalled for %d epochs, learning rate %.3g -> %.3g",
            counter,
            state.learning_rate,
            reduced,
        )
    return PlateauState(reduced, state.best, 0)


@attr.define(frozen=True)
class EpochRecord:
    """Losses and learning rate after one epoch."""

    epoch: int
    train_loss: float
    validation_loss: float
    learning_rate: float
    best_validation_loss: float


@attr.define
class TrainLog:
    """Per-epoch history of a training run."""

    records: list[EpochRecord] = attr.field(factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int) -> EpochRecord:
        return self.records[index]

    def append(self, record: EpochRecord) -> None:
        """Add the record of the epoch just completed."""
        self.records.append(record)

    def to_frame(self) -> pd.DataFrame:
        """Return the history with the CSV column names."""
        return pd.DataFrame(
            {
                TRAIN_LOG_HEADER[0]: [r.epoch for r in self.records],
                TRAIN_LOG_HEADER[1]: [r.train_loss for r in self.records],
                TRAIN_LOG_HEADER[2]: [r.validation_loss for r in self.records],
                TRAIN_LOG_HEADER[3]: [r.learning_rate for r in self.records],
            },
            columns=list(TRAIN_LOG_HEADER),
        )


def write_train_log_csv(log: TrainLog) -> str:
    """Render the history as `epoch,train_loss,val_loss,lr` CSV."""
    return log.to_frame().to_csv(
        index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def predict_batch(net: StackedLstm, inputs: np.ndarray) -> np.ndarray:
    """Predict every row of a (samples x window) matrix without dropout."""
    predictions, _ = forward_batch(inputs, net)
    return predictions


def _clip(grads: np.ndarray, clip_norm: float | None) -> np.ndarray:
    if clip_norm is None:
        return grads
    norm = float(np.linalg.norm(grads))
    if norm > clip_norm:
        return grads * (clip_norm / norm)
    return grads


def fit(
    train_set: WindowedDataset,
    validation_set: WindowedDataset,
    config: TrainConfig,
    net: StackedLstm | None = None,
) -> tuple[StackedLstm, AdamState, TrainLog]:
    """Train a network (initialised from the config seed unless given)."""
    if train_set.num_samples == 0 or validation_set.num_samples == 0:
        raise BrentcastUsageError(
            "Training needs non-empty training and validation sets"
        )
    if train_set.window_len != config.window_len:
        raise BrentcastShapeError(
            f"Dataset windows of {train_set.window_len} but config expects "
            f"{config.window_len}"
        )
    if net is None:
        net = init_network(config.layer_sizes, config.dropout_rate, config.seed)
    shuffle_rng = substream(config.seed, _SHUFFLE_STREAM)
    dropout_rng = substream(config.seed, _DROPOUT_STREAM)

    params = net.flatten()
    adam = AdamState.fresh(params.size, config.learning_rate)
    plateau = PlateauState(config.learning_rate)
    log = TrainLog()
    _LOGGER.info(
        "Training %s on %d samples (%d validation) for %d epochs",
        list(net.layer_sizes),
        train_set.num_samples,
        validation_set.num_samples,
        config.epochs,
    )

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(train_set.num_samples)
        for start in range(0, order.size, config.batch_size):
            batch = order[start : start + config.batch_size]
            predictions, cache = forward_batch(
                train_set.inputs[batch], net, dropout_rng
            )
            upstream = 2.0 * (predictions - train_set.targets[batch]) / batch.size
            grads = _clip(
                backward_batch(cache, net, upstream).flatten(), config.clip_norm
            )
            params, adam = adam_step(params, grads, adam, config)
            if not np.all(np.isfinite(params)):
                _LOGGER.warning("Parameters became non-finite in epoch %d", epoch)
                raise DivergenceError(epoch, math.nan)
            net = net.with_parameters(params)

        train_loss = mse_loss(predict_batch(net, train_set.inputs), train_set.targets)
        validation_loss = mse_loss(
            predict_batch(net, validation_set.inputs), validation_set.targets
        )
        if not (math.isfinite(train_loss) and math.isfinite(validation_loss)):
            _LOGGER.warning(
                "Non-finite loss in epoch %d: train %s, validation %s",
                epoch,
                train_loss,
                validation_loss,
            )
            raise DivergenceError(
                epoch, train_loss if not math.isfinite(train_loss) else validation_loss
            )
        plateau = plateau_step(plateau, validation_loss, config)
        log.append(
            EpochRecord(
                epoch, train_loss, validation_loss, adam.learning_rate, plateau.best
            )
        )
        adam = attr.evolve(adam, learning_rate=plateau.learning_rate)
        _LOGGER.debug(
            "Epoch %d/%d: train %.6g, validation %.6g, lr %.3g",
            epoch,
            config.epochs,
            train_loss,
            validation_loss,
            log[-1].learning_rate,
        )

    _LOGGER.info(
        "Training finished: train %.6g, validation %.6g",
        log[-1].train_loss,
        log[-1].validation_loss,
    )
    return net, adam, log


def predict_one_step(net: StackedLstm, window: np.ndarray, window_len: int) -> float:
    """Predict the next normalized value after a window of the trained length."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (window_len,):
        raise BrentcastShapeError(
            f"Expected a window of {window_len} values, got shape {window.shape}"
        )
    prediction, _ = forward_sequence(window, net)
    return prediction


def forecast_recursive(
    net: StackedLstm,
    seed_window: np.ndarray,
    horizon: int,
    window_len: int,
) -> np.ndarray:
    """Predict `horizon` steps, feeding each prediction back as the newest input."""
    if horizon < 1:
        raise BrentcastUsageError(f"Forecast horizon must be >= 1, got {horizon}")
    window = np.array(seed_window, dtype=np.float64)
    if window.shape != (window_len,):
        raise BrentcastShapeError(
            f"Expected a seed window of {window_len} values, got shape {window.shape}"
        )
    forecasts = np.empty(horizon)
    for step in range(horizon):
        forecasts[step] = predict_one_step(net, window, window_len)
        window = np.append(window[1:], forecasts[step])
    return forecasts


@attr.define(frozen=True)
class Metrics:
    """Errors in USD/barrel."""

    mae: float
    rmse: float


def to_prices(values: np.ndarray, scaler: Scaler, log_scale: bool) -> np.ndarray:
    """Undo scaling (and the log transform) to get USD/barrel."""
    restored = apply_scaler(values, scaler, inverse=True)
    return np.exp(restored) if log_scale else restored


def price_metrics(predicted: np.ndarray, actual: np.ndarray) -> Metrics:
    """Return MAE and RMSE between two price vectors."""
    errors = np.asarray(predicted, dtype=np.float64) - np.asarray(
        actual, dtype=np.float64
    )
    if errors.size == 0:
        raise BrentcastUsageError("Metrics need at least one sample")
    return Metrics(
        mae=float(np.mean(np.abs(errors))), rmse=float(np.sqrt(np.mean(errors**2)))
    )


def evaluate(
    net: StackedLstm, dataset: WindowedDataset, scaler: Scaler, log_scale: bool
) -> Metrics:
    """MAE and RMSE after mapping predictions and targets back to prices."""
    if dataset.num_samples == 0:
        raise BrentcastUsageError("Evaluation needs a non-empty dataset")
    predictions = predict_batch(net, dataset.inputs)
    return price_metrics(
        to_prices(predictions, scaler, log_scale),
        to_prices(dataset.targets, scaler, log_scale),
    )


def persistence_baseline(
    dataset: WindowedDataset, scaler: Scaler, log_scale: bool
) -> Metrics:
    """Metrics of predicting the last value of every window."""
    if dataset.num_samples == 0:
        raise BrentcastUsageError("Evaluation needs a non-empty dataset")
    return price_metrics(
        to_prices(dataset.inputs[:, -1], scaler, log_scale),
        to_prices(dataset.targets, scaler, log_scale),
    )
