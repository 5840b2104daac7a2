"""Layers with analytic gradients. Inputs carry the batch on axis 0."""
import logging
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

Shape = Tuple[int, ...]


def glorot_uniform(rng: np.random.Generator, shape: Shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


class Layer(ABC):
    """Base layer.

    `params` holds trainable arrays and `grads` their gradients after
    `backward`. `state` holds non-trainable arrays that are still saved
    with the network (batch-norm moving statistics).
    """

    def __init__(self, name: Optional[str] = None):
        self.name = name
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.state: Dict[str, np.ndarray] = {}
        self.input_shape: Optional[Shape] = None
        self.output_shape: Optional[Shape] = None

    @property
    def kind(self) -> str:
        return self.__class__.__name__

    def build(self, input_shape: Shape, rng: np.random.Generator) -> Shape:
        self.input_shape = tuple(input_shape)
        self.output_shape = self._build(self.input_shape, rng)
        return self.output_shape

    def _build(self, input_shape: Shape, rng: np.random.Generator) -> Shape:
        return input_shape

    def n_params(self) -> int:
        arrays = list(self.params.values()) + list(self.state.values())
        return int(sum(a.size for a in arrays))

    def zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    @abstractmethod
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        pass

    def config(self) -> dict:
        return {}


class Dense(Layer):
    def __init__(self, units: int, name: Optional[str] = None):
        super().__init__(name)
        if units < 1:
            raise ParameterError("Dense units must be >= 1")
        self.units = units

    def _build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise DataError(f"Dense expects flat input, got {input_shape}")
        fan_in = input_shape[0]
        self.params = {
            "W": glorot_uniform(rng, (fan_in, self.units), fan_in, self.units),
            "b": np.zeros(self.units),
        }
        return (self.units,)

    def forward(self, x, training=False):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads = {"W": self._x.T @ grad, "b": grad.sum(axis=0)}
        return grad @ self.params["W"].T

    def config(self):
        return {"units": self.units}


class Conv2D(Layer):
    """Stride-1, same-padded 2-D convolution on (B, C, H, W) inputs."""

    def __init__(self, filters: int, kernel: int = 3, name: Optional[str] = None):
        super().__init__(name)
        if kernel % 2 != 1:
            raise ParameterError("Same padding needs an odd kernel size")
        self.filters = filters
        self.kernel = kernel

    def _build(self, input_shape, rng):
        if len(input_shape) != 3:
            raise DataError(f"Conv2D expects (C, H, W) input, got {input_shape}")
        c, h, w = input_shape
        k = self.kernel
        self.params = {
            "W": glorot_uniform(rng, (self.filters, c, k, k), c * k * k, self.filters * k * k),
            "b": np.zeros(self.filters),
        }
        return (self.filters, h, w)

    def _offsets(self):
        for i in range(self.kernel):
            for j in range(self.kernel):
                yield i, j

    def forward(self, x, training=False):
        p = self.kernel // 2
        _, _, h, w = x.shape
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        self._xp = xp
        weights = self.params["W"]
        out = np.zeros((x.shape[0], self.filters, h, w))
        for i, j in self._offsets():
            out += np.einsum("bchw,fc->bfhw", xp[:, :, i:i + h, j:j + w], weights[:, :, i, j])
        return out + self.params["b"][None, :, None, None]

    def backward(self, grad):
        p = self.kernel // 2
        xp = self._xp
        h, w = grad.shape[2], grad.shape[3]
        weights = self.params["W"]
        d_w = np.zeros_like(weights)
        d_xp = np.zeros_like(xp)
        for i, j in self._offsets():
            d_w[:, :, i, j] = np.einsum("bfhw,bchw->fc", grad, xp[:, :, i:i + h, j:j + w])
            d_xp[:, :, i:i + h, j:j + w] += np.einsum("bfhw,fc->bchw", grad, weights[:, :, i, j])
        self.grads = {"W": d_w, "b": grad.sum(axis=(0, 2, 3))}
        return d_xp[:, :, p:p + h, p:p + w]

    def config(self):
        return {"filters": self.filters, "kernel": self.kernel}


class BatchNorm(Layer):
    """Batch normalization over one feature axis of the (unbatched) input.

    axis=0 normalizes conv channels of (C, H, W) inputs; axis=-1 normalizes the
    last axis (sequence features or dense units).
    """

    def __init__(self, axis: int = -1, momentum: float = 0.99, eps: float = 1e-8,
                 name: Optional[str] = None):
        super().__init__(name)
        self.axis = axis
        self.momentum = momentum
        self.eps = eps

    def _build(self, input_shape, rng):
        n_features = input_shape[self.axis]
        self.params = {"gamma": np.ones(n_features), "beta": np.zeros(n_features)}
        self.state = {"moving_mean": np.zeros(n_features), "moving_var": np.ones(n_features)}
        return input_shape

    def _feature_axis(self, ndim: int) -> int:
        # input_shape excludes the batch axis
        return self.axis + 1 if self.axis >= 0 else ndim + self.axis

    def _to_rows(self, x):
        moved = np.moveaxis(x, self._feature_axis(x.ndim), -1)
        return moved.reshape(-1, moved.shape[-1]), moved.shape

    def _from_rows(self, rows, moved_shape, ndim):
        return np.moveaxis(rows.reshape(moved_shape), -1, self._feature_axis(ndim))

    def forward(self, x, training=False):
        rows, moved_shape = self._to_rows(x)
        if training:
            mean = rows.mean(axis=0)
            var = rows.var(axis=0)
            m = self.momentum
            self.state["moving_mean"] = m * self.state["moving_mean"] + (1 - m) * mean
            self.state["moving_var"] = m * self.state["moving_var"] + (1 - m) * var
        else:
            mean = self.state["moving_mean"]
            var = self.state["moving_var"]
        self._inv_std = 1.0 / np.sqrt(var + self.eps)
        self._x_hat = (rows - mean) * self._inv_std
        self._moved_shape = moved_shape
        out = self.params["gamma"] * self._x_hat + self.params["beta"]
        return self._from_rows(out, moved_shape, x.ndim)

    def backward(self, grad):
        rows, _ = self._to_rows(grad)
        x_hat = self._x_hat
        self.grads = {"gamma": (rows * x_hat).sum(axis=0), "beta": rows.sum(axis=0)}
        d_hat = rows * self.params["gamma"]
        m = rows.shape[0]
        d_rows = (self._inv_std / m) * (m * d_hat - d_hat.sum(axis=0)
                                        - x_hat * (d_hat * x_hat).sum(axis=0))
        return self._from_rows(d_rows, self._moved_shape, grad.ndim)

    def config(self):
        return {"axis": self.axis, "momentum": self.momentum, "eps": self.eps}


class ReLU(Layer):
    def forward(self, x, training=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return grad * self._mask


class Sigmoid(Layer):
    def forward(self, x, training=False):
        self._y = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self._y

    def backward(self, grad):
        return grad * self._y * (1.0 - self._y)


class Softmax(Layer):
    def forward(self, x, training=False):
        shifted = np.exp(x - x.max(axis=-1, keepdims=True))
        self._y = shifted / shifted.sum(axis=-1, keepdims=True)
        return self._y

    def backward(self, grad):
        y = self._y
        return y * (grad - (grad * y).sum(axis=-1, keepdims=True))


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""

    def _build(self, input_shape, rng):
        c, h, w = input_shape
        return (c, h // 2, w // 2)

    def forward(self, x, training=False):
        b, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        blocks = (x[:, :, :2 * h2, :2 * w2]
                  .reshape(b, c, h2, 2, w2, 2)
                  .transpose(0, 1, 2, 4, 3, 5)
                  .reshape(b, c, h2, w2, 4))
        self._argmax = blocks.argmax(axis=-1)
        self._in_shape = x.shape
        return np.take_along_axis(blocks, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        b, c, h, w = self._in_shape
        h2, w2 = grad.shape[2], grad.shape[3]
        blocks = np.zeros((b, c, h2, w2, 4))
        np.put_along_axis(blocks, self._argmax[..., None], grad[..., None], axis=-1)
        d_x = np.zeros(self._in_shape)
        d_x[:, :, :2 * h2, :2 * w2] = (blocks.reshape(b, c, h2, w2, 2, 2)
                                       .transpose(0, 1, 2, 4, 3, 5)
                                       .reshape(b, c, 2 * h2, 2 * w2))
        return d_x


class Dropout(Layer):
    """Inverted dropout: active only in training, survivors scaled by 1/(1-p)."""

    def __init__(self, rate: float, name: Optional[str] = None):
        super().__init__(name)
        if not 0 <= rate < 1:
            raise ParameterError("Dropout rate must lie in [0, 1)")
        self.rate = rate
        self._rng = np.random.default_rng(0)

    def _build(self, input_shape, rng):
        self._rng = np.random.default_rng(rng.integers(2**63))
        return input_shape

    def forward(self, x, training=False):
        if not training or self.rate == 0:
            self._scale = None
            return x
        self._scale = (self._rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._scale

    def backward(self, grad):
        return grad if self._scale is None else grad * self._scale

    def config(self):
        return {"rate": self.rate}


class Flatten(Layer):
    def _build(self, input_shape, rng):
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._in_shape)


class Reshape(Layer):
    def __init__(self, target_shape: Shape, name: Optional[str] = None):
        super().__init__(name)
        self.target_shape = tuple(target_shape)

    def _build(self, input_shape, rng):
        if np.prod(input_shape) != np.prod(self.target_shape):
            raise DataError(f"Cannot reshape {input_shape} to {self.target_shape}")
        return self.target_shape

    def forward(self, x, training=False):
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.target_shape)

    def backward(self, grad):
        return grad.reshape(self._in_shape)

    def config(self):
        return {"target_shape": list(self.target_shape)}


class ToSequence(Layer):
    """(channels, W) cochleagram -> (T, channels * W/T) sequence of consecutive column groups."""

    def __init__(self, timesteps: int, name: Optional[str] = None):
        super().__init__(name)
        self.timesteps = timesteps

    def _build(self, input_shape, rng):
        channels, width = input_shape
        if width % self.timesteps:
            raise ParameterError(f"{self.timesteps} timesteps do not divide {width} time bins")
        return (self.timesteps, channels * width // self.timesteps)

    def forward(self, x, training=False):
        return to_sequence(x, self.timesteps)

    def backward(self, grad):
        b, t, _ = grad.shape
        channels, width = self.input_shape
        return grad.reshape(b, t, width // t, channels).transpose(0, 3, 1, 2).reshape(b, channels, width)

    def config(self):
        return {"timesteps": self.timesteps}


def to_sequence(x: np.ndarray, timesteps: int) -> np.ndarray:
    """Split the time axis of (B, channels, W) into `timesteps` steps of W/timesteps columns."""
    b, channels, width = x.shape
    if width % timesteps:
        raise ParameterError(f"{timesteps} timesteps do not divide {width} time bins")
    step = width // timesteps
    return x.reshape(b, channels, timesteps, step).transpose(0, 2, 3, 1).reshape(b, timesteps, step * channels)
