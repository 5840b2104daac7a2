"""Checkpoint file: 8-byte little-endian header length, UTF-8 JSON header, float32 parameter blob."""
import json
import logging
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from src.networks.architectures import build
from src.networks.network import Network
from src.utils.errors import DataError
from src.utils.helpers import to_jsonable

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(network: Network, path: Path, config: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = list(network.arrays())
    header = {
        "format_version": FORMAT_VERSION,
        "architecture": network.architecture,
        "input_shape": list(network.input_shape),
        "seed": network.seed,
        "arrays": [{"key": key, "shape": list(value.shape)} for key, value in arrays],
        "config": config or {},
    }
    header_bytes = json.dumps(to_jsonable(header), allow_nan=False).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for _, value in arrays:
            f.write(np.asarray(value, dtype="<f4").tobytes())
    logger.info(f"Saved {network.architecture.get('name', 'network')} checkpoint to {path}")
    return path


def read_checkpoint(path: Path) -> Tuple[Dict, bytes]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing checkpoint {path}")
    raw = path.read_bytes()
    if len(raw) < 8:
        raise DataError(f"{path} is too short to be a checkpoint")
    (length,) = struct.unpack("<Q", raw[:8])
    try:
        header = json.loads(raw[8:8 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"{path}: unreadable checkpoint header ({e})")
    return header, raw[8 + length:]


def load_checkpoint(path: Path, expected_architecture: Optional[str] = None) -> Tuple[Network, Dict]:
    """Rebuild the network recorded in a checkpoint and fill in its arrays."""
    header, blob = read_checkpoint(path)
    name = header.get("architecture", {}).get("name")
    if expected_architecture is not None and name != expected_architecture:
        raise DataError(f"{path} holds a {name!r} network, expected {expected_architecture!r}")
    network = build(header["architecture"])

    expected = {key: value.shape for key, value in network.arrays()}
    stored = header["arrays"]
    if [entry["key"] for entry in stored] != list(expected):
        raise DataError(f"{path}: stored arrays do not match the {name!r} architecture")
    total = sum(int(np.prod(entry["shape"])) for entry in stored)
    if len(blob) != 4 * total:
        raise DataError(f"{path}: parameter blob has {len(blob)} bytes, expected {4 * total}")

    values = np.frombuffer(blob, dtype="<f4")
    offset = 0
    for entry in stored:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape))
        network.set_array(entry["key"], values[offset:offset + size].reshape(shape).astype(float))
        offset += size
    return network, header.get("config", {})
