"""Exception types shared by every module; the CLI maps them to exit codes."""


class EchoGeometryError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 1


class ParameterError(EchoGeometryError, ValueError):
    """An argument is out of range or inconsistent"""

    exit_code = 2


class DataError(EchoGeometryError):
    """A file, array or checkpoint does not have the expected content"""

    exit_code = 3


class DechirpError(DataError):
    """The reference channel has no echo crossing to align against"""


class TrainingDivergedError(EchoGeometryError):
    """Loss became NaN or infinite during training"""

    exit_code = 4

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"Training diverged at epoch {epoch}")
