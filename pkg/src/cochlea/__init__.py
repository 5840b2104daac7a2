from src.cochlea.dechirp import CrossingTable, ThresholdMode, dechirp, detect_crossings
from src.cochlea.filterbank import (ChannelBankOutput, FilterbankSpec, design_dapgf,
                                    filterbank_apply)
from src.cochlea.ripple import expected_ripple_spacing, ripple_spacing
from src.cochlea.spectrogram import (Cochleagram, cochleagram_from_timeseries, crop_bins,
                                     normalize, spectrogram)

__all__ = [
    "ChannelBankOutput",
    "Cochleagram",
    "CrossingTable",
    "FilterbankSpec",
    "ThresholdMode",
    "cochleagram_from_timeseries",
    "crop_bins",
    "dechirp",
    "design_dapgf",
    "detect_crossings",
    "expected_ripple_spacing",
    "filterbank_apply",
    "normalize",
    "ripple_spacing",
    "spectrogram",
]
