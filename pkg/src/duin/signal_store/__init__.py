"""
Signal Store Module

Data model, on-disk format and dataset plumbing for multichannel intracranial
recordings: channels, recordings, trials, samples, the synthetic corpus,
pre-training segmentation, trial augmentation and stratified splits.
"""

from .dataset import (
    AnnotationError,
    PretrainDataset,
    SplitError,
    SplitSpec,
    TrialDataset,
    augment_trial,
    extract_trial_samples,
    fetch_pretrain_sample,
    segment_pretrain,
    select_channels,
    shift_sample,
    split_dataset,
)
from .persistence import (
    RecordingFormatError,
    SignalStoreError,
    load_recording,
    save_recording,
    sidecar_path,
)
from .recording import ChannelMeta, Recording, Sample, SegmentDescriptor, TrialAnnotation
from .synthetic import SyntheticSpec, class_template, generate_synthetic

__all__ = [
    "AnnotationError",
    "ChannelMeta",
    "PretrainDataset",
    "Recording",
    "RecordingFormatError",
    "Sample",
    "SegmentDescriptor",
    "SignalStoreError",
    "SplitError",
    "SplitSpec",
    "SyntheticSpec",
    "TrialAnnotation",
    "TrialDataset",
    "augment_trial",
    "class_template",
    "extract_trial_samples",
    "fetch_pretrain_sample",
    "generate_synthetic",
    "load_recording",
    "save_recording",
    "segment_pretrain",
    "select_channels",
    "shift_sample",
    "sidecar_path",
    "split_dataset",
]
