"""Central finite-difference checks of analytic layer and loss gradients."""
from typing import Callable, Dict, Optional

import numpy as np

from src.networks.layers import Layer


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def numeric_gradient(fn: Callable[[], float], array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d fn / d array by central differences, perturbing `array` in place."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        plus = fn()
        flat[i] = saved - h
        minus = fn()
        flat[i] = saved
        out[i] = (plus - minus) / (2 * h)
    return grad


def check_layer_gradients(layer: Layer, x: np.ndarray, h: float = 1e-5, seed: int = 0,
                          training: bool = True) -> Dict[str, float]:
    """Relative error per input/parameter for the scalar sum(layer(x) * r), r fixed random.

    The layer must already be built for x.shape[1:].
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=float)
    projection = rng.standard_normal(layer.forward(x, training).shape)

    def objective() -> float:
        return float((layer.forward(x, training) * projection).sum())

    layer.forward(x, training)
    d_x = layer.backward(projection)
    analytic = {"input": d_x, **{k: v.copy() for k, v in layer.grads.items()}}

    errors = {"input": relative_error(analytic["input"], numeric_gradient(objective, x, h))}
    for name, value in layer.params.items():
        errors[name] = relative_error(analytic[name], numeric_gradient(objective, value, h))
    return errors


def check_loss_gradient(loss_fn: Callable, scores: np.ndarray, targets: np.ndarray,
                        h: float = 1e-5, weights: Optional[np.ndarray] = None) -> float:
    """Relative error of a (value, grad) loss function's gradient w.r.t. its scores."""
    scores = np.array(scores, dtype=float)
    args = (targets,) if weights is None else (targets, weights)
    _, analytic = loss_fn(scores, *args)
    numeric = numeric_gradient(lambda: loss_fn(scores, *args)[0], scores, h)
    return relative_error(analytic, numeric)
