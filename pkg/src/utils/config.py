import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import find_dotenv, load_dotenv

from src.utils.errors import ParameterError

logger = logging.getLogger(__name__)


def _default_threads() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment (and .env if present)."""
    threads: int = field(default_factory=_default_threads)
    log_level: str = "INFO"
    data_dir: Path = Path("data")

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv(find_dotenv(usecwd=True))
        threads_raw = os.getenv("ECHOGEO_THREADS")
        threads = _default_threads()
        if threads_raw:
            try:
                threads = int(threads_raw)
            except ValueError:
                raise ParameterError(f"ECHOGEO_THREADS must be an integer, got {threads_raw!r}")
            if threads < 1:
                raise ParameterError("ECHOGEO_THREADS must be >= 1")
        return cls(
            threads=threads,
            log_level=os.getenv("ECHOGEO_LOG_LEVEL", "INFO").upper(),
            data_dir=Path(os.getenv("ECHOGEO_DATA_DIR", "data")),
        )


def configure_logging(settings: Settings) -> None:
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
