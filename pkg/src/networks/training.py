import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from src.networks.losses import LossKind, loss_and_gradient
from src.networks.network import Network
from src.networks.optimizers import SGD, Adam, Optimizer
from src.utils.errors import DataError, ParameterError, TrainingDivergedError


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


# epochs each architecture needs to converge on its default corpus
DEFAULT_EPOCHS = {"cnn": 100, "rnn": 100, "gs": 200}


def default_epochs(arch: str) -> int:
    if arch not in DEFAULT_EPOCHS:
        raise ParameterError(f"Unknown architecture {arch!r}")
    return DEFAULT_EPOCHS[arch]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 100
    learning_rate: float = 1e-3
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    seed: int = 0
    loss: LossKind = LossKind.EQ3
    class_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ParameterError("learning_rate must be >= 0")
        OptimizerKind(self.optimizer)
        LossKind(self.loss)

    def make_optimizer(self) -> Optimizer:
        if OptimizerKind(self.optimizer) == OptimizerKind.SGD:
            return SGD(self.learning_rate, self.momentum)
        return Adam(self.learning_rate, self.beta1, self.beta2, self.eps)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["optimizer"] = OptimizerKind(self.optimizer).value
        data["loss"] = LossKind(self.loss).value
        data["class_weights"] = list(self.class_weights) if self.class_weights else None
        return data


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise DataError(f"Labels outside 0..{n_classes - 1}")
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def accuracy(scores: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == np.argmax(targets, axis=1)))


@dataclass
class TrainingResult:
    network: Network
    history: pd.DataFrame
    config: TrainConfig
    notes: List[str] = field(default_factory=list)


class Trainer:
    """Seeded mini-batch training with a per-epoch pandas history."""

    def __init__(self, network: Network, config: TrainConfig):
        self.network = network
        self.config = config
        self.optimizer = config.make_optimizer()
        self.rng = np.random.default_rng(config.seed)
        self.logger = logging.getLogger(self.__class__.__name__)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
        scores = self.network.predict(x)
        loss, _ = loss_and_gradient(self.config.loss, scores, y, self.config.class_weights)
        return loss, accuracy(scores, y)

    def _step(self, xb: np.ndarray, yb: np.ndarray) -> float:
        scores = self.network.forward(xb, training=True)
        loss, grad = loss_and_gradient(self.config.loss, scores, yb, self.config.class_weights)
        self.network.backward(grad)
        for key, param, param_grad in self.network.parameters():
            self.optimizer.update(key, param, param_grad)
        return loss

    def fit(self, x: np.ndarray, y: np.ndarray, x_val: Optional[np.ndarray] = None,
            y_val: Optional[np.ndarray] = None) -> TrainingResult:
        if len(x) == 0:
            raise DataError("Training set is empty")
        if len(x) != len(y):
            raise DataError(f"{len(x)} samples but {len(y)} targets")
        cfg = self.config
        has_val = x_val is not None and y_val is not None and len(x_val) > 0

        rows = []

        def record(epoch: int, train_loss: float, train_acc: float):
            row = {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc,
                   "val_loss": np.nan, "val_acc": np.nan}
            if has_val:
                row["val_loss"], row["val_acc"] = self.evaluate(x_val, y_val)
            rows.append(row)
            return row

        record(0, *self.evaluate(x, y))
        for epoch in range(1, cfg.epochs + 1):
            order = self.rng.permutation(len(x))
            losses, weights = [], []
            for start in range(0, len(x), cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                loss = self._step(x[idx], y[idx])
                if not np.isfinite(loss):
                    self.logger.error(f"Loss became {loss} in epoch {epoch}")
                    raise TrainingDivergedError(epoch, f"non-finite loss {loss}")
                losses.append(loss)
                weights.append(len(idx))
            train_loss = float(np.average(losses, weights=weights))
            _, train_acc = self.evaluate(x, y)
            row = record(epoch, train_loss, train_acc)
            if epoch == 1 or epoch % 10 == 0 or epoch == cfg.epochs:
                self.logger.info(f"Epoch {epoch}/{cfg.epochs}: loss {train_loss:.4f} acc {train_acc:.3f}"
                                 + (f" val_loss {row['val_loss']:.4f} val_acc {row['val_acc']:.3f}"
                                    if has_val else ""))
        history = pd.DataFrame(rows, columns=["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        return TrainingResult(network=self.network, history=history, config=cfg)


def train(network: Network, x: np.ndarray, y: np.ndarray, config: TrainConfig,
          x_val: Optional[np.ndarray] = None, y_val: Optional[np.ndarray] = None) -> TrainingResult:
    return Trainer(network, config).fit(x, y, x_val, y_val)
