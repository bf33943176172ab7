#!/usr/bin/env python3
"""
Module implements constants for the Brent price forecasting library.

:license: MIT, see LICENSE for more details.
"""

from enum import Enum, IntEnum
from typing import Final

# CSV layout
SERIES_HEADER: Final = ("date", "price")
TRAIN_LOG_HEADER: Final = ("epoch", "train_loss", "val_loss", "lr")
PREDICTIONS_HEADER: Final = ("step", "actual", "predicted")
FORECAST_HEADER: Final = ("step", "predicted")
DATE_FORMAT: Final = "%Y-%m-%d"
FLOAT_FORMAT: Final = "%.12g"

# Preprocessing
DEFAULT_WINDOW_LEN: Final = 90
DEFAULT_TRAIN_FRACTION: Final = 0.7

# Network
DEFAULT_LAYER_SIZES: Final = (60, 60, 60)
DEFAULT_DROPOUT_RATE: Final = 0.2
FORGET_BIAS_INIT: Final = 1.0

# Optimiser and schedule
DEFAULT_EPOCHS: Final = 50
DEFAULT_BATCH_SIZE: Final = 32
DEFAULT_LEARNING_RATE: Final = 1e-3
DEFAULT_ADAM_BETA1: Final = 0.9
DEFAULT_ADAM_BETA2: Final = 0.999
DEFAULT_ADAM_EPSILON: Final = 1e-8
DEFAULT_PLATEAU_FACTOR: Final = 0.5
DEFAULT_PLATEAU_PATIENCE: Final = 3
DEFAULT_PLATEAU_MIN_DELTA: Final = 1e-6
DEFAULT_MIN_LEARNING_RATE: Final = 1e-5
DEFAULT_SEED: Final = 0

# Gradient check
DEFAULT_FD_STEP: Final = 1e-5
GRADIENT_CHECK_FLOOR: Final = 1e-8

# Geometric Brownian motion
TRADING_DAYS_PER_YEAR: Final = 252
DEFAULT_GBM_DT: Final = 1.0 / TRADING_DAYS_PER_YEAR
DEFAULT_NUM_PATHS: Final = 50
DEFAULT_GBM_HORIZON: Final = 60
MIN_CALIBRATION_POINTS: Final = 3
ZERO_SPREAD_ULPS: Final = 16

# Checkpoint
CHECKPOINT_MAGIC: Final = "brentcast-checkpoint"
CHECKPOINT_VERSION: Final = 1


class ScaleKind(str, Enum):
    """Scale of the values held by a price series."""

    RAW = "raw"
    LOG = "log"


class ScalerScope(str, Enum):
    """Portion of the series the min-max scaler is fitted on."""

    TRAIN = "train"
    FULL = "full"


class Gate(IntEnum):
    """LSTM gates, in the order their blocks are stacked in the weights."""

    FORGET = 0
    INPUT = 1
    CANDIDATE = 2
    OUTPUT = 3


class Mode(str, Enum):
    """Forward pass mode."""

    TRAIN = "train"
    INFER = "infer"
