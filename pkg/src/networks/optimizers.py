from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from src.utils.errors import ParameterError


class Optimizer(ABC):
    def __init__(self, learning_rate: float):
        if learning_rate < 0:
            raise ParameterError("Learning rate must be non-negative")
        self.learning_rate = learning_rate

    @abstractmethod
    def update(self, key: str, param: np.ndarray, grad: np.ndarray):
        """Update `param` in place."""


class SGD(Optimizer):
    def __init__(self, learning_rate: float = 0.01, momentum: float = 0.0):
        super().__init__(learning_rate)
        self.momentum = momentum
        self._velocity: Dict[str, np.ndarray] = {}

    def update(self, key, param, grad):
        v = self._velocity.get(key)
        v = -self.learning_rate * grad if v is None else self.momentum * v - self.learning_rate * grad
        self._velocity[key] = v
        param += v


class Adam(Optimizer):
    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}
        self._t: Dict[str, int] = {}

    def update(self, key, param, grad):
        m = self._m.get(key, np.zeros_like(param))
        v = self._v.get(key, np.zeros_like(param))
        t = self._t.get(key, 0) + 1
        m = self.beta1 * m + (1 - self.beta1) * grad
        v = self.beta2 * v + (1 - self.beta2) * grad**2
        self._m[key], self._v[key], self._t[key] = m, v, t
        m_hat = m / (1 - self.beta1**t)
        v_hat = v / (1 - self.beta2**t)
        param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
