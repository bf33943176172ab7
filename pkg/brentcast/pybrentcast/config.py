#!/usr/bin/env python3
"""
Module implements configuration for training runs and price simulations.

:license: MIT, see LICENSE for more details.
"""

from collections.abc import Mapping
from typing import Any, Final

import attr
import voluptuous as vol

from .const import (
    DEFAULT_ADAM_BETA1,
    DEFAULT_ADAM_BETA2,
    DEFAULT_ADAM_EPSILON,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DROPOUT_RATE,
    DEFAULT_EPOCHS,
    DEFAULT_GBM_DT,
    DEFAULT_GBM_HORIZON,
    DEFAULT_LAYER_SIZES,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MIN_LEARNING_RATE,
    DEFAULT_NUM_PATHS,
    DEFAULT_PLATEAU_FACTOR,
    DEFAULT_PLATEAU_MIN_DELTA,
    DEFAULT_PLATEAU_PATIENCE,
    DEFAULT_SEED,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_WINDOW_LEN,
    ScalerScope,
)
from .exceptions import BrentcastConfigError
from .utils import convert_layer_sizes


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise BrentcastConfigError(message)


def _optional_positive(instance: Any, attribute: attr.Attribute, value: Any) -> None:
    _check(value is None or value > 0, f"{attribute.name} must be > 0 or unset")


@attr.define(frozen=True, kw_only=True)
class TrainConfig:
    """All hyperparameters of a training run."""

    epochs: int = attr.field(converter=int, default=DEFAULT_EPOCHS)
    batch_size: int = attr.field(converter=int, default=DEFAULT_BATCH_SIZE)
    learning_rate: float = attr.field(converter=float, default=DEFAULT_LEARNING_RATE)
    adam_beta1: float = attr.field(converter=float, default=DEFAULT_ADAM_BETA1)
    adam_beta2: float = attr.field(converter=float, default=DEFAULT_ADAM_BETA2)
    adam_epsilon: float = attr.field(converter=float, default=DEFAULT_ADAM_EPSILON)
    plateau_factor: float = attr.field(converter=float, default=DEFAULT_PLATEAU_FACTOR)
    plateau_patience: int = attr.field(converter=int, default=DEFAULT_PLATEAU_PATIENCE)
    plateau_min_delta: float = attr.field(
        converter=float, default=DEFAULT_PLATEAU_MIN_DELTA
    )
    min_learning_rate: float = attr.field(
        converter=float, default=DEFAULT_MIN_LEARNING_RATE
    )
    window_len: int = attr.field(converter=int, default=DEFAULT_WINDOW_LEN)
    layer_sizes: tuple[int, ...] = attr.field(
        converter=convert_layer_sizes, default=DEFAULT_LAYER_SIZES
    )
    dropout_rate: float = attr.field(converter=float, default=DEFAULT_DROPOUT_RATE)
    seed: int = attr.field(converter=int, default=DEFAULT_SEED)
    train_fraction: float = attr.field(converter=float, default=DEFAULT_TRAIN_FRACTION)
    validation_fraction: float = attr.field(converter=float, default=0.0)
    log_transform: bool = attr.field(converter=bool, default=True)
    scaler_scope: ScalerScope = attr.field(
        converter=ScalerScope, default=ScalerScope.TRAIN
    )
    clip_norm: float | None = attr.field(
        converter=attr.converters.optional(float),
        default=None,
        validator=_optional_positive,
    )

    def __attrs_post_init__(self) -> None:
        """Check the hyperparameter invariants."""
        _check(self.epochs >= 1, "epochs must be >= 1")
        _check(self.batch_size >= 1, "batch_size must be >= 1")
        _check(self.learning_rate > 0, "learning_rate must be > 0")
        _check(0 <= self.adam_beta1 < 1, "adam_beta1 must lie in [0, 1)")
        _check(0 <= self.adam_beta2 < 1, "adam_beta2 must lie in [0, 1)")
        _check(self.adam_epsilon > 0, "adam_epsilon must be > 0")
        _check(0 < self.plateau_factor < 1, "plateau_factor must lie in (0, 1)")
        _check(self.plateau_patience >= 1, "plateau_patience must be >= 1")
        _check(self.plateau_min_delta >= 0, "plateau_min_delta must be >= 0")
        _check(self.min_learning_rate > 0, "min_learning_rate must be > 0")
        _check(self.window_len >= 1, "window_len must be >= 1")
        _check(
            all(size >= 1 for size in self.layer_sizes), "layer sizes must be >= 1"
        )
        _check(0 <= self.dropout_rate < 1, "dropout_rate must lie in [0, 1)")
        _check(self.seed >= 0, "seed must be >= 0")
        _check(0 < self.train_fraction < 1, "train_fraction must lie in (0, 1)")
        _check(
            0 <= self.validation_fraction < 1,
            "validation_fraction must lie in [0, 1)",
        )

    def as_dict(self) -> dict[str, Any]:
        """Return the configuration as plain values."""
        return attr.asdict(self, value_serializer=_plain_value)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "TrainConfig":
        """Validate a mapping (e.g. a YAML section) and build the config."""
        return cls(**_validate(TRAIN_CONFIG_SCHEMA, data))


@attr.define(frozen=True, kw_only=True)
class GbmSettings:
    """Parameters of a price path simulation run."""

    dt: float = attr.field(converter=float, default=DEFAULT_GBM_DT)
    num_paths: int = attr.field(converter=int, default=DEFAULT_NUM_PATHS)
    horizon: int = attr.field(converter=int, default=DEFAULT_GBM_HORIZON)
    seed: int = attr.field(converter=int, default=DEFAULT_SEED)
    workers: int = attr.field(converter=int, default=1)

    def __attrs_post_init__(self) -> None:
        _check(self.dt > 0, "dt must be > 0")
        _check(self.num_paths >= 1, "num_paths must be >= 1")
        _check(self.horizon >= 1, "horizon must be >= 1")
        _check(self.seed >= 0, "seed must be >= 0")
        _check(self.workers >= 1, "workers must be >= 1")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GbmSettings":
        """Validate a mapping (e.g. a YAML section) and build the settings."""
        return cls(**_validate(GBM_SETTINGS_SCHEMA, data))


def _plain_value(instance: Any, attribute: attr.Attribute | None, value: Any) -> Any:
    if isinstance(value, ScalerScope):
        return value.value
    if isinstance(value, tuple):
        return list(value)
    return value


def _validate(schema: vol.Schema, data: Mapping[str, Any]) -> dict[str, Any]:
    try:
        return schema(dict(data))
    except vol.Invalid as err:
        raise BrentcastConfigError(f"Invalid configuration: {err}") from err


_PROBABILITY = vol.All(
    vol.Coerce(float), vol.Range(min=0.0, max=1.0, max_included=False)
)
_OPEN_UNIT = vol.All(
    vol.Coerce(float),
    vol.Range(min=0.0, max=1.0, min_included=False, max_included=False),
)
_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_COUNT = vol.All(vol.Coerce(int), vol.Range(min=1))

TRAIN_CONFIG_SCHEMA: Final = vol.Schema(
    {
        vol.Optional("epochs"): _COUNT,
        vol.Optional("batch_size"): _COUNT,
        vol.Optional("learning_rate"): _POSITIVE_FLOAT,
        vol.Optional("adam_beta1"): _PROBABILITY,
        vol.Optional("adam_beta2"): _PROBABILITY,
        vol.Optional("adam_epsilon"): _POSITIVE_FLOAT,
        vol.Optional("plateau_factor"): _OPEN_UNIT,
        vol.Optional("plateau_patience"): _COUNT,
        vol.Optional("plateau_min_delta"): vol.All(
            vol.Coerce(float), vol.Range(min=0.0)
        ),
        vol.Optional("min_learning_rate"): _POSITIVE_FLOAT,
        vol.Optional("window_len"): _COUNT,
        vol.Optional("layer_sizes"): vol.Any(str, [_COUNT]),
        vol.Optional("dropout_rate"): _PROBABILITY,
        vol.Optional("seed"): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional("train_fraction"): _OPEN_UNIT,
        vol.Optional("validation_fraction"): _PROBABILITY,
        vol.Optional("log_transform"): vol.Boolean(),
        vol.Optional("scaler_scope"): vol.In([scope.value for scope in ScalerScope]),
        vol.Optional("clip_norm"): vol.Any(None, _POSITIVE_FLOAT),
    }
)

GBM_SETTINGS_SCHEMA: Final = vol.Schema(
    {
        vol.Optional("dt"): _POSITIVE_FLOAT,
        vol.Optional("num_paths"): _COUNT,
        vol.Optional("horizon"): _COUNT,
        vol.Optional("seed"): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional("workers"): _COUNT,
    }
)
