from src.networks.architectures import build, build_cnn, build_gs_net, build_rnn
from src.networks.checkpoint import load_checkpoint, save_checkpoint
from src.networks.losses import LossKind, loss_eq3, loss_eq4
from src.networks.network import Network
from src.networks.training import TrainConfig, Trainer, train

__all__ = [
    "LossKind",
    "Network",
    "TrainConfig",
    "Trainer",
    "build",
    "build_cnn",
    "build_gs_net",
    "build_rnn",
    "load_checkpoint",
    "loss_eq3",
    "loss_eq4",
    "save_checkpoint",
    "train",
]
