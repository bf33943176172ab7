#!/usr/bin/env python3
"""
Module implements the versioned text checkpoint of a trained model.

Layout, one item per line:

    brentcast-checkpoint <version>
    [config]      key=value for every TrainConfig field
    [scaler]      min=, max=
    [network]     layers=, dropout_rate=
    [layer k]     in_size=, hidden_size=, weights=, recurrent=, bias=
    [head]        weights=, bias=
    [end]

Floats are written as the shortest decimal that reads back to the same
double, so a load after a save is bit-exact.

:license: MIT, see LICENSE for more details.
"""

import logging
from collections.abc import Iterator

import numpy as np

from .config import TrainConfig
from .const import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from .exceptions import BrentcastError, CheckpointError, CheckpointVersionError
from .lstm import LstmLayerParams, StackedLstm
from .preprocess import Scaler
from .utils import format_float

_LOGGER = logging.getLogger(__name__)

_ENCODING = "utf-8"


def _format_array(values: np.ndarray) -> str:
    return " ".join(format_float(value) for value in np.asarray(values).ravel())


def _format_config_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return ",".join(str(item) for item in value)
    return str(value)


def save_checkpoint(net: StackedLstm, scaler: Scaler, config: TrainConfig) -> bytes:
    """Serialise network, scaler and config."""
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", "[config]"]
    lines.extend(
        f"{key}={_format_config_value(value)}"
        for key, value in config.as_dict().items()
        if value is not None
    )
    lines.extend(
        [
            "[scaler]",
            f"min={format_float(scaler.min)}",
            f"max={format_float(scaler.max)}",
            "[network]",
            f"layers={len(net.layers)}",
            f"dropout_rate={format_float(net.dropout_rate)}",
        ]
    )
    for index, layer in enumerate(net.layers):
        lines.extend(
            [
                f"[layer {index}]",
                f"in_size={layer.in_size}",
                f"hidden_size={layer.hidden_size}",
                f"weights={_format_array(layer.weights)}",
                f"recurrent={_format_array(layer.recurrent)}",
                f"bias={_format_array(layer.bias)}",
            ]
        )
    lines.extend(
        [
            "[head]",
            f"weights={_format_array(net.head_weights)}",
            f"bias={format_float(net.head_bias)}",
            "[end]",
        ]
    )
    return ("\n".join(lines) + "\n").encode(_ENCODING)


class _Reader:
    """Line cursor that reports 1-based offsets in its errors."""

    def __init__(self, lines: list[str]) -> None:
        self._lines = lines
        self.offset = 0

    def next_line(self) -> str:
        if self.offset >= len(self._lines):
            raise CheckpointError("unexpected end of checkpoint", self.offset + 1)
        line = self._lines[self.offset]
        self.offset += 1
        return line

    def expect_section(self, name: str) -> None:
        line = self.next_line()
        if line != f"[{name}]":
            raise CheckpointError(
                f"expected section [{name}], got {line!r}", self.offset
            )

    def field(self, key: str) -> str:
        line = self.next_line()
        name, sep, value = line.partition("=")
        if not sep or name != key:
            raise CheckpointError(
                f"expected field {key!r}, got {line[:40]!r}", self.offset
            )
        return value

    def fields_until_section(self) -> Iterator[tuple[str, str]]:
        while self.offset < len(self._lines):
            if self._lines[self.offset].startswith("["):
                break
            name, sep, value = self.next_line().partition("=")
            if not sep:
                raise CheckpointError(f"malformed field {name!r}", self.offset)
            yield name, value

    def number(self, key: str) -> float:
        value = self.field(key)
        try:
            return float(value)
        except ValueError as err:
            raise CheckpointError(f"{key} is not a number", self.offset) from err

    def count(self, key: str) -> int:
        value = self.field(key)
        try:
            return int(value)
        except ValueError as err:
            raise CheckpointError(f"{key} is not a count", self.offset) from err

    def array(self, key: str, shape: tuple[int, ...]) -> np.ndarray:
        value = self.field(key)
        try:
            values = np.array(
                [float(token) for token in value.split()], dtype=np.float64
            )
        except ValueError as err:
            raise CheckpointError(f"{key} holds a non-number", self.offset) from err
        expected = int(np.prod(shape))
        if values.size != expected:
            raise CheckpointError(
                f"{key} holds {values.size} values, expected {expected}", self.offset
            )
        return values.reshape(shape)


def load_checkpoint(data: bytes) -> tuple[StackedLstm, Scaler, TrainConfig]:
    """Read back what save_checkpoint wrote."""
    try:
        text = data.decode(_ENCODING)
    except UnicodeDecodeError as err:
        raise CheckpointError("checkpoint is not UTF-8 text", 1) from err
    reader = _Reader(text.splitlines())

    magic, _, version = reader.next_line().partition(" ")
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint", reader.offset)
    if version != str(CHECKPOINT_VERSION):
        raise CheckpointVersionError(
            f"unsupported checkpoint version {version!r} "
            f"(this build reads {CHECKPOINT_VERSION})",
            reader.offset,
        )

    reader.expect_section("config")
    config_offset = reader.offset
    raw_config = dict(reader.fields_until_section())
    try:
        config = TrainConfig.from_mapping(raw_config)
    except BrentcastError as err:
        raise CheckpointError(str(err), config_offset) from err

    try:
        reader.expect_section("scaler")
        scaler_offset = reader.offset
        low, high = reader.number("min"), reader.number("max")
        try:
            scaler = Scaler(low, high)
        except BrentcastError as err:
            raise CheckpointError(str(err), scaler_offset) from err

        reader.expect_section("network")
        num_layers = reader.count("layers")
        dropout_rate = reader.number("dropout_rate")
        layers = []
        for index in range(num_layers):
            reader.expect_section(f"layer {index}")
            in_size = reader.count("in_size")
            hidden = reader.count("hidden_size")
            layers.append(
                LstmLayerParams(
                    reader.array("weights", (4 * hidden, in_size)),
                    reader.array("recurrent", (4 * hidden, hidden)),
                    reader.array("bias", (4 * hidden,)),
                )
            )
        reader.expect_section("head")
        head_offset = reader.offset
        head_size = layers[-1].hidden_size if layers else 0
        head_weights = reader.array("weights", (head_size,))
        head_bias = reader.number("bias")
        reader.expect_section("end")
        try:
            net = StackedLstm(layers, head_weights, head_bias, dropout_rate)
        except BrentcastError as err:
            raise CheckpointError(str(err), head_offset) from err
    except CheckpointError:
        raise
    except BrentcastError as err:
        raise CheckpointError(str(err), reader.offset) from err

    _LOGGER.debug("Loaded checkpoint with layers %s", list(net.layer_sizes))
    return net, scaler, config
