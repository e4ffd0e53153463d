"""
Preprocess Module

Signal conditioning for intracranial recordings: zero-phase band-pass and
notch filtering, polyphase resampling, bipolar re-referencing and z-scoring.
"""

from .filters import FilterSpecError, PreprocessError, bandpass, notch, resample, resampling_ratio
from .pipeline import FilterSpec, run_pipeline
from .referencing import ReferencingError, bipolar_reref, zscore

__all__ = [
    "FilterSpec",
    "FilterSpecError",
    "PreprocessError",
    "ReferencingError",
    "bandpass",
    "bipolar_reref",
    "notch",
    "resample",
    "resampling_ratio",
    "run_pipeline",
    "zscore",
]
