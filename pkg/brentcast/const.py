"""Constants for the brentcast command line."""

from __future__ import annotations

from enum import Enum, IntEnum
from typing import Final

NAME: Final = "brentcast"
VERSION: Final = "0.1.0"

DEFAULT_FORECAST_HORIZON: Final = 5
LOG_FORMAT: Final = "%(asctime)s %(levelname)s [%(name)s] %(message)s"

CONF_LOGGER: Final = "logger"
CONF_DEFAULT: Final = "default"
CONF_LOGS: Final = "logs"
CONF_TRAIN: Final = "train"
CONF_GBM: Final = "gbm"


class ExitCode(IntEnum):
    """Process exit codes."""

    SUCCESS = 0
    USAGE_ERROR = 1
    DATA_ERROR = 2
    NUMERIC_ERROR = 3


class ArtifactKind(str, Enum):
    """Figure payloads the command line writes."""

    SERIES = "series"
    TRAIN_LOG = "train_log"
    PREDICTIONS = "predictions"
    PATHS = "paths"
    FORECAST = "forecast"
    CHECKPOINT = "checkpoint"
