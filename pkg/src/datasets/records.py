"""Sample records and the on-disk dataset manifest."""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.analysis.gs_grid import GsClassGrid
from src.cochlea.spectrogram import Cochleagram
from src.utils.errors import DataError
from src.utils.helpers import read_json, to_jsonable, write_json

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
INDEX_FILE = "samples.csv"
SAMPLES_DIR = "samples"
SPLITS = ("train", "val", "eval")


@dataclass
class SampleRecord:
    index: int
    glint_offsets: Tuple[float, ...]
    broadcast_duration: float
    seed: int
    split: str
    label_gs_class: Optional[int] = None
    path: Optional[str] = None
    # None renders the echo noiseless
    snr_db: Optional[float] = None

    @property
    def label_glint_count(self) -> int:
        return len(self.glint_offsets)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "path": self.path,
            "split": self.split,
            "label_glint_count": self.label_glint_count,
            "label_gs_class": self.label_gs_class,
            "glint_offsets": [float(o) for o in self.glint_offsets],
            "broadcast_duration": float(self.broadcast_duration),
            "seed": int(self.seed),
            "snr_db": None if self.snr_db is None else float(self.snr_db),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SampleRecord":
        record = cls(
            index=int(data["index"]),
            glint_offsets=tuple(float(o) for o in data["glint_offsets"]),
            broadcast_duration=float(data["broadcast_duration"]),
            seed=int(data["seed"]),
            split=data["split"],
            label_gs_class=None if data.get("label_gs_class") is None else int(data["label_gs_class"]),
            path=data.get("path"),
            snr_db=None if data.get("snr_db") is None else float(data["snr_db"]),
        )
        if int(data.get("label_glint_count", record.label_glint_count)) != record.label_glint_count:
            raise DataError(f"Sample {record.index}: glint count label disagrees with its offsets")
        return record


def gs_label(offsets, grid: GsClassGrid) -> Optional[int]:
    """Spacing class of a 1- or 2-glint target; None for 3 and 4 glints."""
    if len(offsets) == 1:
        return 0
    if len(offsets) == 2:
        return grid.class_of(offsets[1] - offsets[0])
    return None


def config_hash(config: Dict) -> str:
    payload = json.dumps(to_jsonable(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class DatasetManifest:
    kind: str
    seed: int
    config: Dict
    samples: List[SampleRecord] = field(default_factory=list)
    grid: GsClassGrid = field(default_factory=GsClassGrid)
    root: Optional[Path] = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def split(self, name: str) -> List[SampleRecord]:
        return [s for s in self.samples if s.split == name]

    def counts(self) -> Dict[str, int]:
        return {name: len(self.split(name)) for name in SPLITS if self.split(name)}

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for s in self.samples:
            row = s.to_dict()
            row["glint_offsets"] = ";".join(f"{o:.6g}" for o in s.glint_offsets)
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "config_hash": self.config_hash,
            "class_grid": self.grid.to_dict(),
            "counts": self.counts(),
            "samples": [s.to_dict() for s in self.samples],
        }

    def save(self, root: Path) -> Path:
        root = Path(root)
        path = write_json(self.to_dict(), root / MANIFEST_FILE)
        self.to_frame().to_csv(root / INDEX_FILE, index=False)
        self.root = root
        return path

    @classmethod
    def load(cls, root: Path) -> "DatasetManifest":
        root = Path(root)
        data = read_json(root / MANIFEST_FILE)
        try:
            grid = GsClassGrid(**data["class_grid"])
            manifest = cls(kind=data["kind"], seed=int(data["seed"]), config=data["config"],
                           samples=[SampleRecord.from_dict(s) for s in data["samples"]],
                           grid=grid, root=root)
        except KeyError as e:
            raise DataError(f"{root / MANIFEST_FILE} is missing {e}")
        if data.get("config_hash") and data["config_hash"] != manifest.config_hash:
            logger.warning(f"Config hash mismatch in {root / MANIFEST_FILE}")
        return manifest

    def sample_path(self, record: SampleRecord) -> Path:
        if self.root is None or record.path is None:
            raise DataError(f"Sample {record.index} has no file")
        return self.root / record.path

    def load_cochleagram(self, record: SampleRecord) -> Cochleagram:
        return Cochleagram.load(self.sample_path(record))

    def arrays(self, split: Optional[str] = None) -> Tuple[np.ndarray, List[SampleRecord]]:
        """Stacked cochleagram values (B, channels, bins) and their records."""
        records = self.samples if split is None else self.split(split)
        if not records:
            raise DataError(f"No samples in split {split!r}")
        return np.stack([self.load_cochleagram(r).values for r in records]), records


def glint_count_targets(records: List[SampleRecord], n_classes: int = 4) -> np.ndarray:
    out = np.zeros((len(records), n_classes))
    for i, r in enumerate(records):
        out[i, r.label_glint_count - 1] = 1.0
    return out


def gs_windows(manifest: DatasetManifest, window: int = 5) -> Tuple[np.ndarray, np.ndarray]:
    """Split every cropped GS sample into non-overlapping windows labeled with its class."""
    values, records = manifest.arrays()
    n_channels, n_bins = values.shape[1], values.shape[2]
    per_sample = n_bins // window
    x = (values[:, :, :per_sample * window]
         .reshape(len(records), n_channels, per_sample, window)
         .transpose(0, 2, 1, 3)
         .reshape(-1, n_channels, window))
    labels = np.repeat([r.label_gs_class for r in records], per_sample)
    y = np.zeros((len(labels), manifest.grid.n_classes))
    y[np.arange(len(labels)), labels] = 1.0
    return x, y
