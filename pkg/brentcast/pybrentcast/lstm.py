#!/usr/bin/env python3
"""
Module implements a stacked LSTM regressor with a scalar dense head.

Each layer stacks its four gate blocks (forget, input, candidate, output)
along the first axis of its weight matrices:

    f = sigmoid(W_f x + U_f h + b_f)      i = sigmoid(W_i x + U_i h + b_i)
    g = tanh(W_c x + U_c h + b_c)         o = sigmoid(W_o x + U_o h + b_o)
    c' = f * c + i * g                    h' = o * tanh(c')

Dropout is inverted dropout on every layer's hidden output (including the
output fed to the head), never on the recurrent connections. All state
starts at zero for every window.

:license: MIT, see LICENSE for more details.
"""

import logging
import math
from collections.abc import Sequence

import attr
import numpy as np
from scipy.special import expit

from .const import DEFAULT_FD_STEP, FORGET_BIAS_INIT, GRADIENT_CHECK_FLOOR, Gate, Mode
from .exceptions import (
    BrentcastConfigError,
    BrentcastShapeError,
    BrentcastUsageError,
)
from .utils import relative_error, substream, to_readonly_array

_LOGGER = logging.getLogger(__name__)


@attr.define(frozen=True, eq=False)
class LstmLayerParams:
    """Gate weights of one LSTM layer, gate blocks stacked in Gate order."""

    weights: np.ndarray = attr.field(converter=to_readonly_array)
    recurrent: np.ndarray = attr.field(converter=to_readonly_array)
    bias: np.ndarray = attr.field(converter=to_readonly_array)

    def __attrs_post_init__(self) -> None:
        hidden = self.recurrent.shape[-1] if self.recurrent.ndim == 2 else -1
        if (
            hidden < 1
            or self.recurrent.shape != (4 * hidden, hidden)
            or self.weights.ndim != 2
            or self.weights.shape[0] != 4 * hidden
            or self.weights.shape[1] < 1
            or self.bias.shape != (4 * hidden,)
        ):
            raise BrentcastShapeError(
                f"Inconsistent layer shapes W{self.weights.shape} "
                f"U{self.recurrent.shape} b{self.bias.shape}"
            )
        if not (
            np.all(np.isfinite(self.weights))
            and np.all(np.isfinite(self.recurrent))
            and np.all(np.isfinite(self.bias))
        ):
            raise BrentcastShapeError("Layer parameters must be finite")

    @property
    def in_size(self) -> int:
        """Return the input width."""
        return int(self.weights.shape[1])

    @property
    def hidden_size(self) -> int:
        """Return the number of units."""
        return int(self.recurrent.shape[1])

    def _block(self, gate: Gate) -> slice:
        return slice(gate * self.hidden_size, (gate + 1) * self.hidden_size)

    def gate_weights(self, gate: Gate) -> np.ndarray:
        """Return W_g (hidden_size x in_size)."""
        return self.weights[self._block(gate)]

    def gate_recurrent(self, gate: Gate) -> np.ndarray:
        """Return U_g (hidden_size x hidden_size)."""
        return self.recurrent[self._block(gate)]

    def gate_bias(self, gate: Gate) -> np.ndarray:
        """Return b_g."""
        return self.bias[self._block(gate)]

    @classmethod
    def zeros(cls, in_size: int, hidden_size: int) -> "LstmLayerParams":
        """Return an all-zero layer."""
        return cls(
            np.zeros((4 * hidden_size, in_size)),
            np.zeros((4 * hidden_size, hidden_size)),
            np.zeros(4 * hidden_size),
        )


def _flatten(
    layers: Sequence[LstmLayerParams], head_weights: np.ndarray, head_bias: float
) -> np.ndarray:
    parts: list[np.ndarray] = []
    for layer in layers:
        parts.extend((layer.weights.ravel(), layer.recurrent.ravel(), layer.bias))
    parts.extend((head_weights, np.array([head_bias])))
    return np.concatenate(parts)


@attr.define(frozen=True, eq=False)
class StackedLstm:
    """Stacked LSTM layers followed by a dense scalar head."""

    layers: tuple[LstmLayerParams, ...] = attr.field(converter=tuple)
    head_weights: np.ndarray = attr.field(converter=to_readonly_array)
    head_bias: float = attr.field(converter=float)
    dropout_rate: float = attr.field(converter=float, default=0.0)

    def __attrs_post_init__(self) -> None:
        if not self.layers:
            raise BrentcastShapeError("A network needs at least one layer")
        if self.layers[0].in_size != 1:
            raise BrentcastShapeError(
                f"First layer must take scalar inputs, got {self.layers[0].in_size}"
            )
        for below, above in zip(self.layers, self.layers[1:]):
            if above.in_size != below.hidden_size:
                raise BrentcastShapeError(
                    f"Layer input {above.in_size} does not match the "
                    f"{below.hidden_size} units below it"
                )
        if self.head_weights.shape != (self.layers[-1].hidden_size,):
            raise BrentcastShapeError(
                f"Head weights of shape {self.head_weights.shape} do not match "
                f"{self.layers[-1].hidden_size} units"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise BrentcastConfigError(
                f"Dropout rate must lie in [0, 1), got {self.dropout_rate}"
            )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        """Return the hidden size of every layer."""
        return tuple(layer.hidden_size for layer in self.layers)

    @property
    def num_parameters(self) -> int:
        """Return the total number of scalar parameters."""
        return sum(
            layer.weights.size + layer.recurrent.size + layer.bias.size
            for layer in self.layers
        ) + self.head_weights.size + 1

    def flatten(self) -> np.ndarray:
        """Return every parameter in one vector, layer by layer, head last."""
        return _flatten(self.layers, self.head_weights, self.head_bias)

    def with_parameters(self, flat: np.ndarray) -> "StackedLstm":
        """Return a network of the same shape holding the given vector."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_parameters,):
            raise BrentcastShapeError(
                f"Expected {self.num_parameters} parameters, got {flat.shape}"
            )
        offset = 0

        def take(shape: tuple[int, ...]) -> np.ndarray:
            nonlocal offset
            size = math.prod(shape)
            chunk = flat[offset : offset + size].reshape(shape)
            offset += size
            return chunk

        layers = [
            LstmLayerParams(
                take(layer.weights.shape),
                take(layer.recurrent.shape),
                take(layer.bias.shape),
            )
            for layer in self.layers
        ]
        head_weights = take(self.head_weights.shape)
        return StackedLstm(layers, head_weights, float(flat[offset]), self.dropout_rate)

    def with_dropout(self, dropout_rate: float) -> "StackedLstm":
        """Return the same parameters with another dropout rate."""
        return attr.evolve(self, dropout_rate=dropout_rate)

    @classmethod
    def zeros(
        cls, layer_sizes: Sequence[int], dropout_rate: float = 0.0
    ) -> "StackedLstm":
        """Return a network whose parameters are all zero."""
        _check_sizes(layer_sizes, dropout_rate)
        in_sizes = [1, *layer_sizes[:-1]]
        layers = [LstmLayerParams.zeros(i, h) for i, h in zip(in_sizes, layer_sizes)]
        return cls(layers, np.zeros(layer_sizes[-1]), 0.0, dropout_rate)


@attr.define(frozen=True, eq=False)
class Gradients:
    """Gradients shaped like the parameters of a StackedLstm."""

    layers: tuple[LstmLayerParams, ...] = attr.field(converter=tuple)
    head_weights: np.ndarray = attr.field(converter=to_readonly_array)
    head_bias: float = attr.field(converter=float)

    def flatten(self) -> np.ndarray:
        """Return every gradient in the order of StackedLstm.flatten."""
        return _flatten(self.layers, self.head_weights, self.head_bias)


@attr.define(frozen=True, eq=False)
class LstmState:
    """Hidden and cell state of every layer; leading axes are batch axes."""

    hidden: tuple[np.ndarray, ...] = attr.field(converter=tuple)
    cell: tuple[np.ndarray, ...] = attr.field(converter=tuple)

    def layer(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (h, c) of one layer."""
        return self.hidden[index], self.cell[index]

    @classmethod
    def zeros(cls, net: StackedLstm, batch: int) -> "LstmState":
        """Return the all-zero state a sequence starts from."""
        return cls(
            [np.zeros((batch, size)) for size in net.layer_sizes],
            [np.zeros((batch, size)) for size in net.layer_sizes],
        )


@attr.define(frozen=True, eq=False)
class StepCache:
    """Everything the backward pass needs from one cell step."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    forget: np.ndarray
    input: np.ndarray
    candidate: np.ndarray
    output: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@attr.define(frozen=True, eq=False)
class ForwardCache:
    """Per layer step caches and dropout masks of a training forward pass."""

    steps: tuple[tuple[StepCache, ...], ...]
    masks: tuple[np.ndarray | None, ...]
    head_input: np.ndarray


def _check_sizes(layer_sizes: Sequence[int], dropout_rate: float) -> None:
    if not layer_sizes or any(int(size) < 1 for size in layer_sizes):
        raise BrentcastConfigError(f"Invalid layer sizes {list(layer_sizes)}")
    if not 0.0 <= dropout_rate < 1.0:
        raise BrentcastConfigError(
            f"Dropout rate must lie in [0, 1), got {dropout_rate}"
        )


def init_network(
    layer_sizes: Sequence[int], dropout_rate: float, seed: int
) -> StackedLstm:
    """
    Initialise a network deterministically from a seed.

    Every W_g and U_g is drawn uniformly from [-L, L] with
    L = sqrt(6 / (fan_in + fan_out)); biases are zero except the forget
    gate, which starts at one.
    """
    layer_sizes = [int(size) for size in layer_sizes]
    _check_sizes(layer_sizes, dropout_rate)
    rng = substream(seed)
    layers = []
    in_size = 1
    for hidden in layer_sizes:
        w_limit = math.sqrt(6.0 / (in_size + hidden))
        u_limit = math.sqrt(6.0 / (hidden + hidden))
        weights = np.concatenate(
            [rng.uniform(-w_limit, w_limit, (hidden, in_size)) for _ in Gate]
        )
        recurrent = np.concatenate(
            [rng.uniform(-u_limit, u_limit, (hidden, hidden)) for _ in Gate]
        )
        bias = np.zeros(4 * hidden)
        bias[Gate.FORGET * hidden : (Gate.FORGET + 1) * hidden] = FORGET_BIAS_INIT
        layers.append(LstmLayerParams(weights, recurrent, bias))
        in_size = hidden
    head_limit = math.sqrt(6.0 / (in_size + 1))
    head_weights = rng.uniform(-head_limit, head_limit, in_size)
    _LOGGER.debug(
        "Initialised network %s (dropout %s, seed %d)", layer_sizes, dropout_rate, seed
    )
    return StackedLstm(layers, head_weights, 0.0, dropout_rate)


def cell_step(
    x_t: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    params: LstmLayerParams,
) -> tuple[np.ndarray, np.ndarray, StepCache]:
    """Advance one layer by one time step; leading axes are batch axes."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    hidden = params.hidden_size
    if (
        x_t.shape[-1:] != (params.in_size,)
        or h_prev.shape[-1:] != (hidden,)
        or c_prev.shape != h_prev.shape
        or x_t.shape[:-1] != h_prev.shape[:-1]
    ):
        raise BrentcastShapeError(
            f"Cell step got x{x_t.shape} h{h_prev.shape} c{c_prev.shape} for a "
            f"{params.in_size}->{hidden} layer"
        )
    z = x_t @ params.weights.T + h_prev @ params.recurrent.T + params.bias
    forget = expit(z[..., :hidden])
    input_ = expit(z[..., hidden : 2 * hidden])
    candidate = np.tanh(z[..., 2 * hidden : 3 * hidden])
    output = expit(z[..., 3 * hidden :])
    c_t = forget * c_prev + input_ * candidate
    tanh_c = np.tanh(c_t)
    h_t = output * tanh_c
    cache = StepCache(
        x_t, h_prev, c_prev, forget, input_, candidate, output, c_t, tanh_c
    )
    return h_t, c_t, cache


def forward_batch(
    windows: np.ndarray,
    net: StackedLstm,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache | None]:
    """
    Run a batch of windows (batch x steps) through the network.

    With a generator the pass runs in training mode: dropout masks are drawn
    from it and a cache for backward_batch is returned. Without one no
    dropout is applied and no cache is kept.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 2 or windows.shape[1] < 1:
        raise BrentcastShapeError(
            f"Expected a (batch, steps) array, got {windows.shape}"
        )
    if not np.all(np.isfinite(windows)):
        raise BrentcastUsageError("Windows must hold finite values")
    training = rng is not None
    batch, steps = windows.shape
    layer_input = windows.T[:, :, np.newaxis]
    step_caches: list[tuple[StepCache, ...]] = []
    masks: list[np.ndarray | None] = []

    state = LstmState.zeros(net, batch)

    for index, layer in enumerate(net.layers):
        h, c = state.layer(index)
        outputs = np.empty((steps, batch, layer.hidden_size))
        layer_steps = []
        for t in range(steps):
            h, c, step = cell_step(layer_input[t], h, c, layer)
            outputs[t] = h
            if training:
                layer_steps.append(step)
        mask = None
        if training and net.dropout_rate > 0.0:
            keep = rng.random(outputs.shape) >= net.dropout_rate
            mask = keep / (1.0 - net.dropout_rate)
            outputs = outputs * mask
        if training:
            step_caches.append(tuple(layer_steps))
            masks.append(mask)
        layer_input = outputs

    head_input = layer_input[-1]
    predictions = head_input @ net.head_weights + net.head_bias
    if not training:
        return predictions, None
    return predictions, ForwardCache(tuple(step_caches), tuple(masks), head_input)


def backward_batch(
    cache: ForwardCache, net: StackedLstm, upstream: np.ndarray
) -> Gradients:
    """Backpropagate dLoss/dPrediction per sample; gradients are summed."""
    if cache is None:
        raise BrentcastUsageError("Backward pass needs a cache from a training forward")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (cache.head_input.shape[0],):
        raise BrentcastShapeError(
            f"Upstream of shape {upstream.shape} for a batch of "
            f"{cache.head_input.shape[0]}"
        )
    head_weights_grad = cache.head_input.T @ upstream
    head_bias_grad = float(np.sum(upstream))

    steps = len(cache.steps[0])
    d_outputs = np.zeros((steps, upstream.shape[0], net.layers[-1].hidden_size))
    d_outputs[-1] = np.outer(upstream, net.head_weights)
    layer_grads: list[LstmLayerParams] = []

    for layer, layer_steps, mask in zip(
        reversed(net.layers), reversed(cache.steps), reversed(cache.masks)
    ):
        d_hidden = d_outputs if mask is None else d_outputs * mask
        d_weights = np.zeros_like(layer.weights)
        d_recurrent = np.zeros_like(layer.recurrent)
        d_bias = np.zeros_like(layer.bias)
        d_inputs = np.empty((steps, upstream.shape[0], layer.in_size))
        dh_next = np.zeros_like(d_hidden[0])
        dc_next = np.zeros_like(d_hidden[0])
        for t in reversed(range(steps)):
            step = layer_steps[t]
            dh = d_hidden[t] + dh_next
            dc = dc_next + dh * step.output * (1.0 - step.tanh_c**2)
            dz = np.concatenate(
                (
                    dc * step.c_prev * step.forget * (1.0 - step.forget),
                    dc * step.candidate * step.input * (1.0 - step.input),
                    dc * step.input * (1.0 - step.candidate**2),
                    dh * step.tanh_c * step.output * (1.0 - step.output),
                ),
                axis=-1,
            )
            d_weights += dz.T @ step.x
            d_recurrent += dz.T @ step.h_prev
            d_bias += dz.sum(axis=0)
            d_inputs[t] = dz @ layer.weights
            dh_next = dz @ layer.recurrent
            dc_next = dc * step.forget
        layer_grads.append(LstmLayerParams(d_weights, d_recurrent, d_bias))
        d_outputs = d_inputs

    return Gradients(tuple(reversed(layer_grads)), head_weights_grad, head_bias_grad)


def forward_sequence(
    window: np.ndarray,
    net: StackedLstm,
    mode: Mode = Mode.INFER,
    seed: int | None = None,
) -> tuple[float, ForwardCache | None]:
    """Predict the value following one window; train mode also returns a cache."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or window.size < 1:
        raise BrentcastShapeError(
            f"Expected a non-empty window, got shape {window.shape}"
        )
    rng = None
    if Mode(mode) is Mode.TRAIN:
        if seed is None:
            raise BrentcastUsageError("Training mode needs a seed for dropout masks")
        rng = substream(seed)
    predictions, cache = forward_batch(window[np.newaxis, :], net, rng)
    return float(predictions[0]), cache


def backward_sequence(
    cache: ForwardCache | None, net: StackedLstm, upstream: float
) -> Gradients:
    """Return exact gradients of one prediction scaled by dLoss/dPrediction."""
    if cache is None:
        raise BrentcastUsageError("Backward pass needs a cache from a training forward")
    return backward_batch(cache, net, np.array([float(upstream)]))


def gradient_check(
    net: StackedLstm,
    window: np.ndarray,
    target: float,
    fd_step: float = DEFAULT_FD_STEP,
) -> float:
    """
    Compare BPTT against central differences of the squared error.

    Returns the largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    over all parameters.
    """
    if not fd_step > 0:
        raise BrentcastUsageError(f"Finite-difference step must be > 0, got {fd_step}")
    if net.dropout_rate != 0.0:
        raise BrentcastUsageError("Gradient check needs a network without dropout")
    window = np.asarray(window, dtype=np.float64)

    prediction, cache = forward_sequence(window, net, Mode.TRAIN, seed=0)
    analytic = backward_sequence(cache, net, 2.0 * (prediction - target)).flatten()

    def loss(flat: np.ndarray) -> float:
        value, _ = forward_sequence(window, net.with_parameters(flat), Mode.INFER)
        return (value - target) ** 2

    theta = net.flatten()
    numeric = np.empty_like(theta)
    for k in range(theta.size):
        shifted = theta.copy()
        shifted[k] = theta[k] + fd_step
        upper = loss(shifted)
        shifted[k] = theta[k] - fd_step
        lower = loss(shifted)
        numeric[k] = (upper - lower) / (2.0 * fd_step)

    worst = float(np.max(relative_error(analytic, numeric, GRADIENT_CHECK_FLOOR)))
    _LOGGER.debug("Gradient check over %d parameters: %.3g", theta.size, worst)
    return worst
