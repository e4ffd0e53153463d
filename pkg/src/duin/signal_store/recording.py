"""
Recording Module

Defines the in-memory data model for multichannel intracranial recordings:
channel identity, the recording itself, trial annotations and the fixed-length
samples cut from it.

Example:
    >>> import numpy as np
    >>> from duin.signal_store import ChannelMeta, Recording
    >>> channels = [ChannelMeta(name="A1", electrode_id="A", contact_index=0)]
    >>> rec = Recording(
    ...     subject_id="sub-01",
    ...     sample_rate_hz=1000.0,
    ...     channels=channels,
    ...     data=np.zeros((1, 2000), dtype=np.float32),
    ... )
    >>> rec.n_samples
    2000
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


@dataclass(frozen=True)
class ChannelMeta:
    """
    Identity of one recording channel.

    Attributes:
        name: Display name of the channel (e.g., "A3").
        electrode_id: Identifier of the depth electrode the contact sits on.
        contact_index: Position of the contact along its electrode, from 0.
    """

    name: str
    electrode_id: str
    contact_index: int

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("Channel name cannot be empty")
        if self.contact_index < 0:
            raise ValueError(f"contact_index must be >= 0, got {self.contact_index}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "electrode_id": self.electrode_id,
            "contact_index": self.contact_index,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ChannelMeta:
        return cls(
            name=data["name"],
            electrode_id=data["electrode_id"],
            contact_index=int(data["contact_index"]),
        )


@dataclass(frozen=True)
class TrialAnnotation:
    """
    One labeled trial inside a recording.

    Attributes:
        onset_sample: First sample of the trial.
        n_samples: Trial length in samples.
        label: Class index into the recording's label names.
    """

    onset_sample: int
    n_samples: int
    label: int

    def __post_init__(self) -> None:
        if self.onset_sample < 0:
            raise ValueError(f"onset_sample must be >= 0, got {self.onset_sample}")
        if self.n_samples <= 0:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")

    @property
    def end_sample(self) -> int:
        return self.onset_sample + self.n_samples

    def to_dict(self) -> dict[str, int]:
        return {
            "onset_sample": self.onset_sample,
            "n_samples": self.n_samples,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrialAnnotation:
        return cls(
            onset_sample=int(data["onset_sample"]),
            n_samples=int(data["n_samples"]),
            label=int(data["label"]),
        )


@dataclass
class Recording:
    """
    A multichannel recording with its channel metadata and trial annotations.

    The data matrix is channel-major with shape (C, T). Trials and label names
    travel with the recording so that a single save captures everything the
    downstream stages need.

    Attributes:
        subject_id: Subject identifier.
        sample_rate_hz: Sampling rate in Hz.
        channels: Channel metadata, one entry per data row.
        data: Float matrix of shape (C, T).
        trials: Labeled trial annotations (may be empty for rest recordings).
        label_names: Names for each label index used by ``trials``.

    Raises:
        ValueError: If shapes disagree, values are non-finite, channel
            identities repeat or a trial does not fit the recording.
    """

    subject_id: str
    sample_rate_hz: float
    channels: list[ChannelMeta]
    data: np.ndarray
    trials: list[TrialAnnotation] = field(default_factory=list)
    label_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.data.ndim != 2:
            raise ValueError(f"data must be 2D (channels, samples), got shape {self.data.shape}")
        if not np.issubdtype(self.data.dtype, np.floating):
            raise ValueError(f"data must be a float array, got dtype {self.data.dtype}")
        if self.data.shape[0] != len(self.channels):
            raise ValueError(
                f"Channel count mismatch: data has {self.data.shape[0]} rows "
                f"but {len(self.channels)} channels are described"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("Recording data contains non-finite values")

        identities = [(ch.name, ch.electrode_id, ch.contact_index) for ch in self.channels]
        if len(identities) != len(set(identities)):
            raise ValueError("Channel identities (name, electrode_id, contact_index) must be unique")

        for trial in self.trials:
            if trial.end_sample > self.n_samples:
                raise ValueError(
                    f"Trial at onset {trial.onset_sample} with {trial.n_samples} samples "
                    f"overruns recording of {self.n_samples} samples"
                )
            if self.label_names and trial.label >= len(self.label_names):
                raise ValueError(
                    f"Trial label {trial.label} outside label names ({len(self.label_names)})"
                )

    @property
    def n_channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.data.shape[1])

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def channel_names(self) -> list[str]:
        return [ch.name for ch in self.channels]

    def electrodes(self) -> dict[str, list[int]]:
        """
        Group channel rows by electrode, in order of first appearance.

        Returns:
            Mapping electrode_id -> row indices sorted by contact_index.
        """
        groups: dict[str, list[int]] = {}
        for row, ch in enumerate(self.channels):
            groups.setdefault(ch.electrode_id, []).append(row)
        for rows in groups.values():
            rows.sort(key=lambda r: self.channels[r].contact_index)
        return groups

    def with_data(
        self,
        data: np.ndarray,
        sample_rate_hz: float | None = None,
        channels: list[ChannelMeta] | None = None,
    ) -> Recording:
        """
        Return a new recording with replaced data, keeping the metadata.

        Trials are rescaled when the sample rate changes.

        Args:
            data: Replacement matrix.
            sample_rate_hz: New sample rate, if it changed.
            channels: New channel list, if it changed.

        Returns:
            A new Recording.
        """
        rate = self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
        trials = self.trials
        if rate != self.sample_rate_hz:
            scale = rate / self.sample_rate_hz
            n_out = data.shape[1]
            trials = []
            for t in self.trials:
                onset = int(round(t.onset_sample * scale))
                length = min(max(1, int(round(t.n_samples * scale))), n_out - onset)
                if length > 0:
                    trials.append(TrialAnnotation(onset, length, t.label))
        return replace(
            self,
            data=data,
            sample_rate_hz=rate,
            channels=list(self.channels if channels is None else channels),
            trials=list(trials),
            label_names=list(self.label_names),
        )


@dataclass
class Sample:
    """
    A fixed-length window cut from a recording.

    Attributes:
        data: Float matrix of shape (C, T_s).
        label: Class index for downstream samples, None for pre-training.
        source_offset: Sample offset of the window start in its recording.
    """

    data: np.ndarray
    label: int | None = None
    source_offset: int = 0

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise ValueError(f"Sample data must be 2D, got shape {self.data.shape}")

    @property
    def n_samples(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class SegmentDescriptor:
    """A pre-training segment: an 8 s span of a recording."""

    offset: int
    n_samples: int

    @property
    def end(self) -> int:
        return self.offset + self.n_samples
