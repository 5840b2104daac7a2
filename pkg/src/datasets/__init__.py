from src.datasets.generators import (GENERATORS, gen_classification_corpus, gen_eval_corpus,
                                     gen_gs_corpus)
from src.datasets.records import DatasetManifest, SampleRecord, glint_count_targets, gs_windows

__all__ = [
    "GENERATORS",
    "DatasetManifest",
    "SampleRecord",
    "gen_classification_corpus",
    "gen_eval_corpus",
    "gen_gs_corpus",
    "glint_count_targets",
    "gs_windows",
]
