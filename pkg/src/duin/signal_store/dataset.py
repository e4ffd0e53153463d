"""
Dataset Module

Turns recordings into training material: overlapping pre-training segments
with random 4 s crops, labeled 3 s trial samples with shift augmentation, and
stratified train/validation/test splits.

All random draws consume a ``numpy.random.Generator`` supplied by the caller,
so parallel workers with their own generator streams stay deterministic.

Example:
    >>> rng = np.random.default_rng(0)
    >>> segments = segment_pretrain(rec)
    >>> sample = fetch_pretrain_sample(rec, segments[0], rng)
    >>> sample.n_samples == int(4 * rec.sample_rate_hz)
    True
"""

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from .persistence import SignalStoreError
from .recording import Recording, Sample, SegmentDescriptor, TrialAnnotation

# Configure logging
logger = logging.getLogger(__name__)

PRETRAIN_SEGMENT_SECONDS = 8.0
PRETRAIN_HOP_SECONDS = 4.0
PRETRAIN_SAMPLE_SECONDS = 4.0
TRIAL_SECONDS = 3.0
MAX_SHIFT_SECONDS = 0.3


class AnnotationError(SignalStoreError):
    """Raised when a trial annotation does not fit its recording."""

    pass


class SplitError(SignalStoreError):
    """Raised when a dataset cannot be split as requested."""

    pass


@dataclass(frozen=True)
class SplitSpec:
    """
    Train/validation/test fractions and the shuffle seed.

    Attributes:
        fractions: (train, val, test), each > 0, summing to 1.
        seed: Seed of the per-class shuffle.
    """

    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.fractions) != 3:
            raise ValueError(f"fractions must have 3 entries, got {len(self.fractions)}")
        if any(f <= 0 for f in self.fractions):
            raise ValueError(f"Each split fraction must be > 0, got {self.fractions}")
        if abs(sum(self.fractions) - 1.0) > 1e-6:
            raise ValueError(f"Split fractions must sum to 1, got {sum(self.fractions)}")


def segment_pretrain(
    rec: Recording,
    segment_seconds: float = PRETRAIN_SEGMENT_SECONDS,
    hop_seconds: float = PRETRAIN_HOP_SECONDS,
    exclude_trials: bool = False,
) -> list[SegmentDescriptor]:
    """
    Cut a recording into overlapping pre-training segments.

    Segments of ``segment_seconds`` start every ``hop_seconds``; there are
    floor((T - seg) / hop) + 1 of them.

    Args:
        rec: Source recording.
        segment_seconds: Segment length (8 s).
        hop_seconds: Distance between segment starts (4 s).
        exclude_trials: Drop segments that overlap any annotated trial.

    Returns:
        Segment descriptors in time order.

    Raises:
        SignalStoreError: If the recording is shorter than one segment.
    """
    seg_len = int(round(segment_seconds * rec.sample_rate_hz))
    hop = int(round(hop_seconds * rec.sample_rate_hz))
    if rec.n_samples < seg_len:
        raise SignalStoreError(
            f"Recording of {rec.duration_seconds:.2f} s is shorter than one "
            f"{segment_seconds:g} s pre-training segment"
        )

    count = (rec.n_samples - seg_len) // hop + 1
    segments = [SegmentDescriptor(offset=i * hop, n_samples=seg_len) for i in range(count)]

    if exclude_trials and rec.trials:
        segments = [
            s
            for s in segments
            if not any(s.offset < t.end_sample and t.onset_sample < s.end for t in rec.trials)
        ]
        logger.debug(f"{len(segments)} of {count} segments remain after excluding task trials")

    return segments


def fetch_pretrain_sample(
    rec: Recording,
    segment: SegmentDescriptor,
    rng: np.random.Generator,
    sample_seconds: float = PRETRAIN_SAMPLE_SECONDS,
) -> Sample:
    """
    Crop a random ``sample_seconds`` window out of a pre-training segment.

    The start offset is uniform over [0, segment - window], inclusive.

    Args:
        rec: Recording the segment belongs to.
        segment: Segment descriptor.
        rng: Random generator.
        sample_seconds: Window length (4 s).

    Returns:
        An unlabeled Sample.
    """
    window = int(round(sample_seconds * rec.sample_rate_hz))
    max_start = segment.n_samples - window
    start = segment.offset + int(rng.integers(0, max_start, endpoint=True))
    return Sample(data=rec.data[:, start : start + window].copy(), source_offset=start)


def extract_trial_samples(
    rec: Recording,
    annotations: Sequence[TrialAnnotation],
    window_seconds: float = TRIAL_SECONDS,
) -> list[Sample]:
    """
    Cut one labeled sample per trial, aligned to the trial onset.

    Args:
        rec: Source recording.
        annotations: Trials to extract.
        window_seconds: Sample length (3 s).

    Returns:
        Labeled samples, in annotation order.

    Raises:
        AnnotationError: If a window overruns the recording.
    """
    window = int(round(window_seconds * rec.sample_rate_hz))
    samples = []
    for trial in annotations:
        end = trial.onset_sample + window
        if end > rec.n_samples:
            raise AnnotationError(
                f"Trial at onset {trial.onset_sample} needs {window} samples but the "
                f"recording ends at {rec.n_samples}"
            )
        samples.append(
            Sample(
                data=rec.data[:, trial.onset_sample : end].copy(),
                label=trial.label,
                source_offset=trial.onset_sample,
            )
        )
    return samples


def shift_sample(sample: Sample, shift: int) -> Sample:
    """
    Shift a sample in time, zero-filling the vacated columns.

    Args:
        sample: Input sample.
        shift: Positive shifts right, negative shifts left, in samples.

    Returns:
        A new sample with the same shape and label.
    """
    data = sample.data
    out = np.zeros_like(data)
    n = data.shape[1]
    s = min(abs(shift), n)
    if shift > 0:
        out[:, s:] = data[:, : n - s]
    elif shift < 0:
        out[:, : n - s] = data[:, s:]
    else:
        out[:] = data
    return Sample(data=out, label=sample.label, source_offset=sample.source_offset)


def augment_trial(
    sample: Sample,
    rng: np.random.Generator,
    sample_rate_hz: float,
    max_shift_seconds: float = MAX_SHIFT_SECONDS,
) -> Sample:
    """
    Randomly shift a trial sample left or right by up to ``max_shift_seconds``.

    The shift is rounded to whole samples and the direction is one fair bit.

    Args:
        sample: Labeled trial sample.
        rng: Random generator.
        sample_rate_hz: Rate of the sample, to convert seconds to samples.
        max_shift_seconds: Maximum shift (0.3 s).

    Returns:
        The shifted sample.
    """
    shift = int(round(float(rng.uniform(0.0, max_shift_seconds)) * sample_rate_hz))
    direction = 1 if int(rng.integers(0, 2)) == 1 else -1
    return shift_sample(sample, direction * shift)


def split_dataset(
    samples: Sequence[Sample], spec: SplitSpec
) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """
    Stratified, seeded train/validation/test split.

    Each class is shuffled independently; validation and test receive
    round(fraction * n_class) samples (at least one each) and train the rest.
    Unlabeled samples are treated as one class.

    Args:
        samples: Samples to split.
        spec: Fractions and seed.

    Returns:
        Tuple of (train, val, test) lists.

    Raises:
        SplitError: With fewer than 10 samples or a class with fewer than 3.
    """
    if len(samples) < 10:
        raise SplitError(f"Need at least 10 samples to split, got {len(samples)}")

    by_class: dict[int, list[int]] = {}
    for i, s in enumerate(samples):
        by_class.setdefault(-1 if s.label is None else s.label, []).append(i)

    rng = np.random.default_rng(spec.seed)
    _, f_val, f_test = spec.fractions
    train, val, test = [], [], []
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        if idx.size < 3:
            raise SplitError(f"Class {label} has only {idx.size} samples (need >= 3)")
        rng.shuffle(idx)
        n_val = max(1, int(np.floor(f_val * idx.size + 0.5)))
        n_test = max(1, int(np.floor(f_test * idx.size + 0.5)))
        n_train = idx.size - n_val - n_test
        if n_train < 1:
            raise SplitError(f"Class {label} leaves no training samples")
        train.extend(idx[:n_train].tolist())
        val.extend(idx[n_train : n_train + n_val].tolist())
        test.extend(idx[n_train + n_val :].tolist())

    logger.info(f"Split {len(samples)} samples into {len(train)}/{len(val)}/{len(test)}")
    return (
        [samples[i] for i in sorted(train)],
        [samples[i] for i in sorted(val)],
        [samples[i] for i in sorted(test)],
    )


def select_channels(rec: Recording, indices: Sequence[int]) -> Recording:
    """
    Keep only the given channel rows, in the given order.

    Args:
        rec: Source recording.
        indices: Row indices to keep.

    Returns:
        A new recording with the selected channels.

    Raises:
        ValueError: If an index is out of range or repeated.
    """
    idx = [int(i) for i in indices]
    if any(not 0 <= i < rec.n_channels for i in idx):
        raise ValueError(f"Channel indices out of range [0, {rec.n_channels}): {idx}")
    if len(set(idx)) != len(idx):
        raise ValueError(f"Channel indices must be unique: {idx}")
    return rec.with_data(rec.data[idx], channels=[rec.channels[i] for i in idx])


class PretrainDataset:
    """
    Pre-training samples drawn from the segments of one recording.

    With ``augment`` the crop start is random inside each segment; without it
    every segment yields its first ``sample_seconds``.
    """

    def __init__(
        self,
        rec: Recording,
        segments: Sequence[SegmentDescriptor],
        sample_seconds: float = PRETRAIN_SAMPLE_SECONDS,
        augment: bool = True,
    ):
        if not segments:
            raise SignalStoreError("Pre-training dataset has no segments")
        self.rec = rec
        self.segments = list(segments)
        self.sample_seconds = sample_seconds
        self.augment = augment
        self.window = int(round(sample_seconds * rec.sample_rate_hz))

    def __len__(self) -> int:
        return len(self.segments)

    def get(self, index: int, rng: np.random.Generator) -> Sample:
        segment = self.segments[index]
        if self.augment:
            return fetch_pretrain_sample(self.rec, segment, rng, self.sample_seconds)
        start = segment.offset
        return Sample(
            data=self.rec.data[:, start : start + self.window].copy(), source_offset=start
        )

    def batches(
        self, batch_size: int, rng: np.random.Generator, shuffle: bool = True
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """
        Yield (segment indices, stacked data of shape (B, C, T)) batches.

        The last batch may be smaller than ``batch_size``.
        """
        order = rng.permutation(len(self)) if shuffle else np.arange(len(self))
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            data = np.stack([self.get(int(i), rng).data for i in idx])
            yield idx, data


class TrialDataset:
    """Labeled trial samples with optional shift augmentation."""

    def __init__(
        self,
        samples: Sequence[Sample],
        sample_rate_hz: float,
        augment: bool = False,
        max_shift_seconds: float = MAX_SHIFT_SECONDS,
    ):
        if any(s.label is None for s in samples):
            raise SignalStoreError("TrialDataset requires labeled samples")
        self.samples = list(samples)
        self.sample_rate_hz = sample_rate_hz
        self.augment = augment
        self.max_shift_seconds = max_shift_seconds

    def __len__(self) -> int:
        return len(self.samples)

    def batches(
        self, batch_size: int, rng: np.random.Generator, shuffle: bool = True
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (data of shape (B, C, T), labels of shape (B,)) batches."""
        order = rng.permutation(len(self)) if shuffle else np.arange(len(self))
        for start in range(0, len(order), batch_size):
            chunk = [self.samples[int(i)] for i in order[start : start + batch_size]]
            if self.augment:
                chunk = [
                    augment_trial(s, rng, self.sample_rate_hz, self.max_shift_seconds)
                    for s in chunk
                ]
            data = np.stack([s.data for s in chunk])
            labels = np.array([s.label for s in chunk], dtype=np.int64)
            yield data, labels
