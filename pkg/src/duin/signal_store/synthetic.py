"""
Synthetic Corpus Module

Generates a seeded desk-scale stand-in for an intracranial word-reading
corpus: Gaussian background on every channel (white by default, optionally
1/f-shaped and partly shared across channels), class-specific two-tone
templates on a chosen set of informative channels during trials, and a long
stretch of non-task filler so pre-training segmentation has material.

Example:
    >>> from duin.signal_store import SyntheticSpec, generate_synthetic
    >>> spec = SyntheticSpec(n_channels=10, informative_channels=[2, 5], seed=7)
    >>> rec, trials = generate_synthetic(spec)
    >>> len(trials) == spec.n_classes * spec.n_trials_per_class
    True
"""

import logging
import math
import string
from dataclasses import dataclass, field

import numpy as np

from .recording import ChannelMeta, Recording, TrialAnnotation

# Configure logging
logger = logging.getLogger(__name__)

TEMPLATE_BAND_HZ = (4.0, 40.0)
BACKGROUND_FLOOR_HZ = 0.1


@dataclass
class SyntheticSpec:
    """
    Parameters of the synthetic corpus.

    Attributes:
        n_channels: Number of channels (contacts).
        sample_rate_hz: Sampling rate of the generated recording.
        n_classes: Number of word classes (>= 2).
        n_trials_per_class: Trials generated per class.
        informative_channels: Channel rows that carry the class templates.
        noise_sigma: Standard deviation of the background.
        background_exponent: Spectral slope of the background, power ~ 1 / f**exponent;
            0 gives white noise.
        shared_background: Fraction of background variance common to all channels.
        seed: Seed that fully determines the output.
        trial_seconds: Length of each trial.
        gap_seconds: Minimum silence between consecutive trials.
        filler_ratio: Non-task filler length as a multiple of total trial time.
        signal_amplitude: Amplitude of each template sinusoid.
        contacts_per_electrode: Contacts grouped per electrode in the metadata.
        subject_id: Subject identifier written to the recording.
    """

    n_channels: int = 10
    sample_rate_hz: float = 1000.0
    n_classes: int = 8
    n_trials_per_class: int = 20
    informative_channels: list[int] = field(default_factory=lambda: [2, 5])
    noise_sigma: float = 1.0
    background_exponent: float = 0.0
    shared_background: float = 0.0
    seed: int = 0
    trial_seconds: float = 3.0
    gap_seconds: float = 0.5
    filler_ratio: float = 4.0
    signal_amplitude: float = 1.0
    contacts_per_electrode: int = 10
    subject_id: str = "synthetic-01"

    def __post_init__(self) -> None:
        if self.n_channels < 1:
            raise ValueError(f"n_channels must be >= 1, got {self.n_channels}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.n_trials_per_class < 1:
            raise ValueError(f"n_trials_per_class must be >= 1, got {self.n_trials_per_class}")
        if self.sample_rate_hz <= 2 * TEMPLATE_BAND_HZ[0]:
            raise ValueError(f"sample_rate_hz too low for templates: {self.sample_rate_hz}")
        bad = [c for c in self.informative_channels if not 0 <= c < self.n_channels]
        if bad:
            raise ValueError(f"informative_channels outside [0, {self.n_channels}): {bad}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.background_exponent < 0:
            raise ValueError(f"background_exponent must be >= 0, got {self.background_exponent}")
        if not 0.0 <= self.shared_background <= 1.0:
            raise ValueError(f"shared_background must be in [0, 1], got {self.shared_background}")
        if self.gap_seconds < 0.5:
            raise ValueError(f"gap_seconds must be >= 0.5, got {self.gap_seconds}")
        if self.filler_ratio < 4.0:
            raise ValueError(f"filler_ratio must be >= 4, got {self.filler_ratio}")
        if self.contacts_per_electrode < 1:
            raise ValueError("contacts_per_electrode must be >= 1")


def class_template(spec: SyntheticSpec, label: int, n_samples: int) -> np.ndarray:
    """
    The two-tone template of one class.

    Frequencies and phases are drawn from a generator keyed on (seed, label),
    so the template depends only on the SyntheticSpec and the class index.

    Args:
        spec: Corpus parameters.
        label: Class index.
        n_samples: Template length.

    Returns:
        Array of shape (n_samples,).
    """
    rng = np.random.default_rng([spec.seed, label])
    high = min(TEMPLATE_BAND_HZ[1], 0.4 * spec.sample_rate_hz)
    freqs = rng.uniform(TEMPLATE_BAND_HZ[0], high, size=2)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=2)
    t = np.arange(n_samples) / spec.sample_rate_hz
    tones = np.sin(2.0 * math.pi * freqs[:, None] * t[None, :] + phases[:, None])
    return spec.signal_amplitude * tones.sum(axis=0)


def colored_noise(
    rng: np.random.Generator, shape: tuple[int, int], sample_rate_hz: float, exponent: float
) -> np.ndarray:
    """
    Gaussian rows with power spectral density proportional to 1 / f**exponent.

    White noise is shaped in the frequency domain; the gain is flat below
    BACKGROUND_FLOOR_HZ and zero at DC. Shaped rows are rescaled to unit
    standard deviation; exponent 0 returns the white draw unchanged.
    """
    white = rng.standard_normal(shape)
    if exponent == 0:
        return white
    freqs = np.fft.rfftfreq(shape[-1], d=1.0 / sample_rate_hz)
    gain = np.maximum(freqs, BACKGROUND_FLOOR_HZ) ** (-exponent / 2.0)
    gain[0] = 0.0
    shaped = np.fft.irfft(np.fft.rfft(white, axis=-1) * gain, n=shape[-1], axis=-1)
    return shaped / shaped.std(axis=-1, keepdims=True)


def background(spec: SyntheticSpec, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """Per-channel background mixing private and common components at ``shared_background``."""
    shape = (spec.n_channels, n_samples)
    own = colored_noise(rng, shape, spec.sample_rate_hz, spec.background_exponent)
    if spec.shared_background > 0:
        common = colored_noise(rng, (1, n_samples), spec.sample_rate_hz, spec.background_exponent)
        own = (
            math.sqrt(1.0 - spec.shared_background) * own
            + math.sqrt(spec.shared_background) * common
        )
    return own * spec.noise_sigma


def synthetic_channels(spec: SyntheticSpec) -> list[ChannelMeta]:
    """Channel metadata grouping contacts into electrodes A, B, C, ..."""
    channels = []
    for row in range(spec.n_channels):
        electrode, contact = divmod(row, spec.contacts_per_electrode)
        electrode_id = (
            string.ascii_uppercase[electrode]
            if electrode < len(string.ascii_uppercase)
            else f"E{electrode}"
        )
        channels.append(
            ChannelMeta(
                name=f"{electrode_id}{contact + 1}",
                electrode_id=electrode_id,
                contact_index=contact,
            )
        )
    return channels


def generate_synthetic(spec: SyntheticSpec) -> tuple[Recording, list[TrialAnnotation]]:
    """
    Generate the synthetic recording described by ``spec``.

    The output is a pure function of the SyntheticSpec. Trials come first, each
    followed by a gap of at least ``gap_seconds``; the non-task filler sits
    after the last trial.

    Args:
        spec: Corpus parameters.

    Returns:
        Tuple of (recording, trial annotations). The annotations are also
        attached to the recording.
    """
    rng = np.random.default_rng(spec.seed)
    rate = spec.sample_rate_hz
    trial_len = int(round(spec.trial_seconds * rate))
    gap_len = int(round(spec.gap_seconds * rate))

    labels = np.repeat(np.arange(spec.n_classes), spec.n_trials_per_class)
    rng.shuffle(labels)

    extra_gaps = rng.integers(0, gap_len + 1, size=labels.size)
    onsets = []
    cursor = gap_len
    for extra in extra_gaps:
        onsets.append(cursor)
        cursor += trial_len + gap_len + int(extra)

    filler_len = int(math.ceil(spec.filler_ratio * trial_len * labels.size))
    n_samples = cursor + filler_len

    data = background(spec, rng, n_samples)
    templates = {k: class_template(spec, k, trial_len) for k in range(spec.n_classes)}
    informative = sorted(set(spec.informative_channels))

    trials = []
    for onset, label in zip(onsets, labels, strict=True):
        if informative:
            data[informative, onset : onset + trial_len] += templates[int(label)]
        trials.append(TrialAnnotation(onset_sample=onset, n_samples=trial_len, label=int(label)))

    rec = Recording(
        subject_id=spec.subject_id,
        sample_rate_hz=rate,
        channels=synthetic_channels(spec),
        data=data.astype(np.float32),
        trials=trials,
        label_names=[f"word_{k:02d}" for k in range(spec.n_classes)],
    )
    logger.info(
        f"Generated synthetic recording: {rec.n_channels} ch, {rec.duration_seconds:.1f} s, "
        f"{len(trials)} trials, informative={informative}"
    )
    return rec, trials
