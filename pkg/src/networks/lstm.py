from typing import Optional

import numpy as np

from src.networks.layers import Layer, glorot_uniform
from src.utils.errors import DataError, ParameterError


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LSTM(Layer):
    """LSTM over (B, T, D) inputs with full backpropagation through time.

    Gates are packed [input, forget, cell, output] along the 4U axis of
    Wx (D, 4U), Wh (U, 4U) and b (4U). Parameter count 4 * ((D + U) * U + U).
    """

    def __init__(self, units: int, return_sequences: bool = True, name: Optional[str] = None):
        super().__init__(name)
        if units < 1:
            raise ParameterError("LSTM units must be >= 1")
        self.units = units
        self.return_sequences = return_sequences

    def _build(self, input_shape, rng):
        if len(input_shape) != 2:
            raise DataError(f"LSTM expects (T, D) input, got {input_shape}")
        steps, features = input_shape
        u = self.units
        bias = np.zeros(4 * u)
        bias[u:2 * u] = 1.0
        self.params = {
            "Wx": glorot_uniform(rng, (features, 4 * u), features, 4 * u),
            "Wh": glorot_uniform(rng, (u, 4 * u), u, 4 * u),
            "b": bias,
        }
        return (steps, u) if self.return_sequences else (u,)

    def forward(self, x, training=False):
        b, steps, _ = x.shape
        u = self.units
        wx, wh, bias = self.params["Wx"], self.params["Wh"], self.params["b"]
        h = np.zeros((b, u))
        c = np.zeros((b, u))
        self._cache = []
        outputs = np.empty((b, steps, u))
        x_proj = x @ wx + bias
        for t in range(steps):
            z = x_proj[:, t] + h @ wh
            i = _sigmoid(z[:, :u])
            f = _sigmoid(z[:, u:2 * u])
            g = np.tanh(z[:, 2 * u:3 * u])
            o = _sigmoid(z[:, 3 * u:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h = o * tanh_c
            self._cache.append((h_prev, c_prev, i, f, g, o, tanh_c))
            outputs[:, t] = h
        self._x = x
        return outputs if self.return_sequences else h

    def backward(self, grad):
        x = self._x
        b, steps, _ = x.shape
        u = self.units
        wx, wh = self.params["Wx"], self.params["Wh"]
        d_wx = np.zeros_like(wx)
        d_wh = np.zeros_like(wh)
        d_b = np.zeros(4 * u)
        d_x = np.empty_like(x)
        dh_next = np.zeros((b, u))
        dc_next = np.zeros((b, u))
        for t in reversed(range(steps)):
            h_prev, c_prev, i, f, g, o, tanh_c = self._cache[t]
            if self.return_sequences:
                dh = grad[:, t] + dh_next
            else:
                dh = dh_next + (grad if t == steps - 1 else 0.0)
            dc = dh * o * (1.0 - tanh_c**2) + dc_next
            dz = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g**2),
                dh * tanh_c * o * (1.0 - o),
            ], axis=1)
            d_wx += x[:, t].T @ dz
            d_wh += h_prev.T @ dz
            d_b += dz.sum(axis=0)
            d_x[:, t] = dz @ wx.T
            dh_next = dz @ wh.T
            dc_next = dc * f
        self.grads = {"Wx": d_wx, "Wh": d_wh, "b": d_b}
        return d_x

    def config(self):
        return {"units": self.units, "return_sequences": self.return_sequences}
