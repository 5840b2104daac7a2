"""Network builders for glint-count classification and glint-spacing estimation."""
from typing import Callable, Dict, Sequence, Tuple

from src.networks.layers import (BatchNorm, Conv2D, Dense, Dropout, Flatten, MaxPool2D, ReLU,
                                 Reshape, Sigmoid, Softmax, ToSequence)
from src.networks.losses import LossKind
from src.networks.lstm import LSTM
from src.networks.network import Network
from src.utils.errors import ParameterError

N_CHANNELS = 161
CLASSIFIER_BINS = 250
GLINT_COUNT_CLASSES = 4
TIMESTEP_SWEEP = (5, 10, 25, 50, 125, 250)


def build_cnn(input_shape: Tuple[int, int] = (N_CHANNELS, CLASSIFIER_BINS),
              n_classes: int = GLINT_COUNT_CLASSES, filters: Sequence[int] = (16, 32, 64, 128),
              kernel: int = 3, dropout: float = 0.5, seed: int = 0) -> Network:
    """Conv -> batch norm -> ReLU -> 2x2 max pool blocks, dropout, dense, softmax."""
    layers = [Reshape((1,) + tuple(input_shape))]
    for n_filters in filters:
        layers += [Conv2D(n_filters, kernel), BatchNorm(axis=0), ReLU(), MaxPool2D()]
    layers += [Dropout(dropout), Flatten(), Dense(n_classes), Softmax()]
    architecture = {"name": "cnn", "kwargs": {
        "input_shape": list(input_shape), "n_classes": n_classes, "filters": list(filters),
        "kernel": kernel, "dropout": dropout, "seed": seed,
    }, "loss": LossKind.EQ3.value}
    return Network(layers, input_shape, seed=seed, architecture=architecture)


def build_rnn(input_shape: Tuple[int, int] = (N_CHANNELS, CLASSIFIER_BINS), timesteps: int = CLASSIFIER_BINS,
              n_classes: int = GLINT_COUNT_CLASSES, units: Sequence[int] = (128, 64, 32),
              dropout: float = 0.3, seed: int = 0, name: str = "rnn") -> Network:
    """Stacked LSTMs with batch norm and dropout between them, flatten, dense, sigmoid."""
    if input_shape[1] % timesteps:
        raise ParameterError(f"{timesteps} timesteps do not divide {input_shape[1]} time bins")
    layers = [ToSequence(timesteps)]
    for i, n_units in enumerate(units):
        layers.append(LSTM(n_units, return_sequences=True))
        if i < len(units) - 1:
            layers += [BatchNorm(axis=-1), Dropout(dropout)]
    layers += [Flatten(), Dense(n_classes), Sigmoid()]
    architecture = {"name": name, "kwargs": {
        "input_shape": list(input_shape), "timesteps": timesteps, "n_classes": n_classes,
        "units": list(units), "dropout": dropout, "seed": seed,
    }, "loss": LossKind.EQ4.value}
    return Network(layers, input_shape, seed=seed, architecture=architecture)


def build_gs_net(n_classes: int = 32, window: int = 5, seed: int = 0, dropout: float = 0.3) -> Network:
    """The recurrent classifier with one step per time bin of a 5-bin window and 32 spacing classes."""
    net = build_rnn(input_shape=(N_CHANNELS, window), timesteps=window, n_classes=n_classes,
                    dropout=dropout, seed=seed, name="gs")
    net.architecture["kwargs"] = {"n_classes": n_classes, "window": window, "seed": seed,
                                  "dropout": dropout}
    return net


BUILDERS: Dict[str, Callable[..., Network]] = {
    "cnn": build_cnn,
    "rnn": build_rnn,
    "gs": build_gs_net,
}


def build(architecture: Dict) -> Network:
    """Rebuild a network from its `architecture` record."""
    name = architecture.get("name")
    if name not in BUILDERS:
        raise ParameterError(f"Unknown architecture {name!r}; expected one of {sorted(BUILDERS)}")
    kwargs = dict(architecture.get("kwargs", {}))
    if "input_shape" in kwargs:
        kwargs["input_shape"] = tuple(kwargs["input_shape"])
    return BUILDERS[name](**kwargs)
