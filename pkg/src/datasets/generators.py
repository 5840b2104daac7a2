import logging
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.analysis.gs_grid import GsClassGrid
from src.cochlea.spectrogram import GS_CROP, cochleagram_from_timeseries, crop_bins
from src.datasets.records import SAMPLES_DIR, DatasetManifest, SampleRecord, gs_label
from src.sonar.scene import simulate_from_spec
from src.utils.config import Settings

MULTI_GLINT_DURATIONS = (0.5e-3, 3e-3, 5e-3)
EVAL_DURATIONS = (0.7e-3, 4e-3)
GS_DURATION = 3e-3
# noiseless draw plus noisy ones per GS class
GS_DRAWS = 5
# relative spread of the eval single-glint durations
EVAL_DURATION_JITTER = 0.15
SAMPLES_PER_CLASS = 72
VAL_PER_CLASS = 14
DEFAULT_SNR_DB = 20.0


def sample_seed(seed: int, index: int) -> int:
    return seed * 10000 + index


def draw_offsets(rng: np.random.Generator, grid: np.ndarray, n_glints: int) -> Tuple[float, ...]:
    """First glint at 0, the others drawn without replacement from `grid` and sorted."""
    picks = np.sort(rng.choice(grid, size=n_glints - 1, replace=False))
    return (0.0,) + tuple(float(p) for p in picks)


def _render(job: Tuple[Tuple[float, ...], float, int, Optional[float], Optional[Tuple[int, int]], str]) -> str:
    """Simulate one sample and write its cochleagram; runs in worker processes."""
    offsets, duration, seed, snr_db, crop, path = job
    ts = simulate_from_spec(offsets, duration, snr_db=snr_db, seed=seed)
    cochleagram = cochleagram_from_timeseries(ts)
    if crop is not None:
        cochleagram = crop_bins(cochleagram, *crop)
    cochleagram.save(Path(path))
    return path


class BaseCorpusGenerator(ABC):
    """Builds sample recipes, renders them (in parallel) and writes the manifest."""

    kind = "base"
    crop: Optional[Tuple[int, int]] = None

    def __init__(self, out_dir: Path, seed: int = 0, snr_db: Optional[float] = DEFAULT_SNR_DB,
                 settings: Optional[Settings] = None, grid: Optional[GsClassGrid] = None):
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.snr_db = snr_db
        self.settings = settings or Settings.from_env()
        self.grid = grid or GsClassGrid()
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def _recipes(self) -> List[SampleRecord]:
        """Sample records without files, in index order"""
        pass

    def config(self) -> Dict:
        return {"kind": self.kind, "seed": self.seed, "snr_db": self.snr_db,
                "crop": list(self.crop) if self.crop else None, "grid": self.grid.to_dict()}

    def plan(self) -> DatasetManifest:
        return DatasetManifest(kind=self.kind, seed=self.seed, config=self.config(),
                               samples=self._recipes(), grid=self.grid)

    def generate(self) -> DatasetManifest:
        manifest = self.plan()
        (self.out_dir / SAMPLES_DIR).mkdir(parents=True, exist_ok=True)
        jobs = []
        for record in manifest.samples:
            record.path = f"{SAMPLES_DIR}/{record.index:04d}.f32"
            jobs.append((tuple(record.glint_offsets), record.broadcast_duration, record.seed,
                         record.snr_db, self.crop, str(self.out_dir / record.path)))

        self.logger.info(f"Rendering {len(jobs)} {self.kind} samples with {self.settings.threads} workers")
        if self.settings.threads == 1:
            for i, job in enumerate(jobs, 1):
                _render(job)
                if i % 32 == 0:
                    self.logger.info(f"{i}/{len(jobs)} samples done")
        else:
            with ProcessPoolExecutor(max_workers=self.settings.threads) as pool:
                for i, _ in enumerate(pool.map(_render, jobs), 1):
                    if i % 32 == 0:
                        self.logger.info(f"{i}/{len(jobs)} samples done")

        manifest.save(self.out_dir)
        self.logger.info(f"Saved {self.kind} manifest {manifest.counts()} to {self.out_dir}")
        return manifest


class ClassificationCorpusGenerator(BaseCorpusGenerator):
    """72 samples for each glint count, split 58 train / 14 validation per class."""

    kind = "classify"

    def _recipes(self):
        rng = np.random.default_rng(self.seed)
        offset_grid = np.linspace(3e-3, 70e-3, 19)
        targets: List[Tuple[Tuple[float, ...], float]] = []
        for duration in np.linspace(0.5e-3, 10e-3, SAMPLES_PER_CLASS):
            targets.append(((0.0,), float(duration)))
        for duration in MULTI_GLINT_DURATIONS:
            for spacing in np.linspace(3e-3, 70e-3, SAMPLES_PER_CLASS // len(MULTI_GLINT_DURATIONS)):
                targets.append(((0.0, float(spacing)), duration))
        for n_glints in (3, 4):
            for duration in MULTI_GLINT_DURATIONS:
                for _ in range(SAMPLES_PER_CLASS // len(MULTI_GLINT_DURATIONS)):
                    targets.append((draw_offsets(rng, offset_grid, n_glints), duration))

        records = [SampleRecord(index=i, glint_offsets=offsets, broadcast_duration=duration,
                                seed=sample_seed(self.seed, i), split="train", snr_db=self.snr_db,
                                label_gs_class=gs_label(offsets, self.grid))
                   for i, (offsets, duration) in enumerate(targets)]
        self._assign_validation(records, rng)
        return records

    def _assign_validation(self, records: List[SampleRecord], rng: np.random.Generator):
        for n_glints in range(1, 5):
            members = [r for r in records if r.label_glint_count == n_glints]
            for pick in rng.permutation(len(members))[:VAL_PER_CLASS]:
                members[pick].split = "val"


class GsCorpusGenerator(BaseCorpusGenerator):
    """GS_DRAWS samples per spacing class (class 0 is a single glint), cropped to bins 50-150.

    The first draw of each class is noiseless and the rest carry noise at
    snr_db, each with its own seed, so no class can be told apart by its
    noise texture.
    """

    kind = "gs"
    crop = GS_CROP
    draws = GS_DRAWS

    def config(self) -> Dict:
        return {**super().config(), "draws": self.draws}

    def _recipes(self):
        records = []
        for cls, spacing in enumerate(self.grid.spacings):
            offsets = (0.0,) if cls == 0 else (0.0, float(spacing))
            for draw in range(self.draws):
                index = cls * self.draws + draw
                records.append(SampleRecord(index=index, glint_offsets=offsets, broadcast_duration=GS_DURATION,
                                            seed=sample_seed(self.seed, index), split="train",
                                            snr_db=None if draw == 0 else self.snr_db,
                                            label_gs_class=cls))
        return records


class EvalCorpusGenerator(BaseCorpusGenerator):
    """16 unseen samples per glint count, with 0.7 and 4 ms broadcasts.

    Single-glint durations are jittered around those two so the class is not
    one target repeated.
    """

    kind = "eval"
    per_duration = 8

    def _recipes(self):
        rng = np.random.default_rng(self.seed + 1)
        spacing_grid = np.linspace(0.0, 70e-3, self.per_duration + 1)[1:]
        offset_grid = np.linspace(0.0, 70e-3, self.per_duration + 2)[1:]
        targets = []
        for duration in EVAL_DURATIONS:
            spread = duration * EVAL_DURATION_JITTER
            targets += [((0.0,), float(d)) for d in rng.uniform(duration - spread, duration + spread, self.per_duration)]
        for duration in EVAL_DURATIONS:
            targets += [((0.0, float(d)), duration) for d in spacing_grid]
        for n_glints in (3, 4):
            for duration in EVAL_DURATIONS:
                targets += [(draw_offsets(rng, offset_grid, n_glints), duration)
                            for _ in range(self.per_duration)]
        return [SampleRecord(index=i, glint_offsets=offsets, broadcast_duration=duration,
                             seed=sample_seed(self.seed, i), split="eval", snr_db=self.snr_db,
                             label_gs_class=gs_label(offsets, self.grid))
                for i, (offsets, duration) in enumerate(targets)]


GENERATORS = {
    "classify": ClassificationCorpusGenerator,
    "gs": GsCorpusGenerator,
    "eval": EvalCorpusGenerator,
}


def gen_classification_corpus(out_dir: Path, seed: int = 0, **kwargs) -> DatasetManifest:
    return ClassificationCorpusGenerator(out_dir, seed, **kwargs).generate()


def gen_gs_corpus(out_dir: Path, seed: int = 0, **kwargs) -> DatasetManifest:
    return GsCorpusGenerator(out_dir, seed, **kwargs).generate()


def gen_eval_corpus(out_dir: Path, seed: int = 0, **kwargs) -> DatasetManifest:
    return EvalCorpusGenerator(out_dir, seed, **kwargs).generate()
