import logging
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.networks.layers import Layer, Shape
from src.utils.errors import DataError

logger = logging.getLogger(__name__)


def _snake(name: str) -> str:
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i and name[i - 1].islower():
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


class Network:
    """Sequential stack of layers, built for a fixed per-sample input shape."""

    def __init__(self, layers: Sequence[Layer], input_shape: Shape, seed: int = 0,
                 architecture: Optional[Dict] = None):
        self.layers: List[Layer] = list(layers)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.architecture = architecture or {}
        self.logger = logging.getLogger(self.__class__.__name__)
        self._build()

    def _build(self):
        rng = np.random.default_rng(self.seed)
        counts: Dict[str, int] = {}
        shape = self.input_shape
        for layer in self.layers:
            base = _snake(layer.kind)
            counts[base] = counts.get(base, 0) + 1
            if layer.name is None:
                layer.name = f"{base}_{counts[base]}"
            shape = layer.build(shape, rng)
        self.output_shape = shape

    def _check_input(self, x: np.ndarray):
        if tuple(x.shape[1:]) != self.input_shape:
            raise DataError(f"Network expects samples of shape {self.input_shape}, got {tuple(x.shape[1:])}")

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._check_input(x)
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out, training)
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if len(x) == 0:
            raise DataError("Nothing to predict")
        return np.concatenate([self.forward(x[i:i + batch_size], training=False)
                               for i in range(0, len(x), batch_size)])

    def parameters(self) -> Iterator[Tuple[str, np.ndarray, Optional[np.ndarray]]]:
        """(key, array, grad) for every trainable array, in declaration order."""
        for layer in self.layers:
            for name, value in layer.params.items():
                yield f"{layer.name}.{name}", value, layer.grads.get(name)

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Every saved array (trainable and state), in declaration order."""
        for layer in self.layers:
            for name, value in layer.params.items():
                yield f"{layer.name}.{name}", value
            for name, value in layer.state.items():
                yield f"{layer.name}.{name}", value

    def set_array(self, key: str, value: np.ndarray):
        layer_name, name = key.split(".", 1)
        for layer in self.layers:
            if layer.name != layer_name:
                continue
            target = layer.params if name in layer.params else layer.state
            if name not in target:
                break
            if target[name].shape != value.shape:
                raise DataError(f"{key}: stored shape {value.shape} does not match {target[name].shape}")
            target[name] = np.array(value, dtype=float)
            return
        raise DataError(f"No array {key} in this network")

    def n_params(self) -> int:
        return sum(layer.n_params() for layer in self.layers)

    def summary(self) -> pd.DataFrame:
        rows = [{
            "layer": layer.name,
            "type": layer.kind,
            "output_shape": (None,) + tuple(layer.output_shape),
            "params": layer.n_params(),
        } for layer in self.layers]
        return pd.DataFrame(rows, columns=["layer", "type", "output_shape", "params"])
