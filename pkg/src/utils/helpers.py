import json
import logging
import math
import re
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from src.utils.errors import DataError, ParameterError

logger = logging.getLogger(__name__)

_UNIT_SCALE = {
    "": 1.0,
    "s": 1.0,
    "ms": 1e-3,
    "us": 1e-6,
    "m": 1.0,
    "cm": 1e-2,
    "mm": 1e-3,
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "db": 1.0,
}


def parse_quantity(text: str, default_unit: str = "") -> float:
    """Parse '3ms', '11.1mm', '20' into SI floats."""
    match = re.fullmatch(r"\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-zA-Z]*)\s*", text)
    if not match:
        raise ParameterError(f"Cannot parse quantity {text!r}")
    value, unit = match.groups()
    unit = (unit or default_unit).lower()
    if unit not in _UNIT_SCALE:
        raise ParameterError(f"Unknown unit {unit!r} in {text!r}")
    return float(value) * _UNIT_SCALE[unit]


def parse_quantity_list(text: str, default_unit: str = "") -> list:
    """Parse '0,11.1,48.1mm'; a trailing unit applies to every entry without one."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ParameterError(f"Empty list {text!r}")
    trailing = re.search(r"([a-zA-Z]+)\s*$", parts[-1])
    unit = trailing.group(1) if trailing else default_unit
    return [parse_quantity(p, unit) for p in parts]


def to_jsonable(value: Any) -> Any:
    """Convert dataclasses/arrays/paths to JSON types; NaN and Inf become strings."""
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    return value


def write_json(data: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(to_jsonable(data), f, indent=2, allow_nan=False)
    return path


def read_json(path: Path) -> Dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing file {path}")
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"Malformed JSON in {path}: {e}")


def sidecar_path(array_path: Path) -> Path:
    return Path(array_path).with_suffix(".json")


def write_f32(array: np.ndarray, path: Path, sidecar: Dict) -> Path:
    """Write a little-endian float32 raw array plus its JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = np.asarray(array)
    if array.size == 0:
        logger.warning(f"Writing empty array to {path}")
    array.astype("<f4").tofile(path)
    write_json({**sidecar, "shape": list(array.shape)}, sidecar_path(path))
    return path


def read_f32(path: Path) -> Tuple[np.ndarray, Dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing file {path}")
    meta = read_json(sidecar_path(path))
    data = np.fromfile(path, dtype="<f4")
    shape = tuple(meta.get("shape", [data.size]))
    if int(np.prod(shape)) != data.size:
        raise DataError(f"{path}: sidecar shape {shape} does not match {data.size} values")
    return data.reshape(shape), meta
