"""
Referencing Module

Bipolar re-referencing along each depth electrode and per-channel z-scoring.
"""

import logging

import numpy as np

from ..signal_store import ChannelMeta, Recording
from .filters import PreprocessError

# Configure logging
logger = logging.getLogger(__name__)


class ReferencingError(PreprocessError):
    """Raised when a recording cannot be re-referenced or normalized."""

    pass


def bipolar_reref(rec: Recording) -> Recording:
    """
    Replace each electrode's contacts by differences of adjacent contacts.

    An electrode with n contacts yields n - 1 channels, contact[i+1] - contact[i],
    named "<upper>-<lower>" and carrying contact index i. Electrodes keep
    their order of first appearance in the input.

    Args:
        rec: Input recording with electrode metadata.

    Returns:
        Re-referenced recording with C - (#electrodes) channels.

    Raises:
        ReferencingError: If an electrode has a single contact.
    """
    rows: list[np.ndarray] = []
    channels: list[ChannelMeta] = []
    for electrode_id, members in rec.electrodes().items():
        if len(members) < 2:
            error_msg = f"Electrode {electrode_id!r} has a single contact; cannot form a bipolar pair"
            logger.error(error_msg)
            raise ReferencingError(error_msg)
        for i, (lower, upper) in enumerate(zip(members[:-1], members[1:], strict=True)):
            rows.append(rec.data[upper] - rec.data[lower])
            channels.append(
                ChannelMeta(
                    name=f"{rec.channels[upper].name}-{rec.channels[lower].name}",
                    electrode_id=electrode_id,
                    contact_index=i,
                )
            )

    data = np.stack(rows).astype(rec.data.dtype)
    logger.debug(f"Bipolar re-reference: {rec.n_channels} -> {len(channels)} channels")
    return rec.with_data(data, channels=channels)


def zscore(rec: Recording) -> Recording:
    """
    Standardize every channel with its whole-recording mean and population std.

    Args:
        rec: Input recording.

    Returns:
        Recording with float64 data, each channel at mean 0 and std 1.

    Raises:
        ReferencingError: Naming the first channel with zero variance.
    """
    data = rec.data.astype(np.float64)
    mean = data.mean(axis=1, keepdims=True)
    std = data.std(axis=1, keepdims=True)
    flat = std[:, 0] <= 1e-12 * np.maximum(1.0, np.abs(mean[:, 0]))
    if np.any(flat):
        name = rec.channels[int(np.argmax(flat))].name
        error_msg = f"Channel {name!r} has zero variance and cannot be z-scored"
        logger.error(error_msg)
        raise ReferencingError(error_msg)
    return rec.with_data((data - mean) / std)
