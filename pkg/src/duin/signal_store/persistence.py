"""
Persistence Module

Reads and writes recordings in the little-endian ``DUIN`` binary format with a
JSON sidecar manifest.

File layout (all little-endian)::

    magic "DUIN" (4) | version u16 | flags u16 | n_channels u32 |
    sample_rate f64 | n_samples u64 | float32 payload, channel-major

The sidecar ``<file>.json`` holds subject_id, channels[], trials[] and
label_names[].

Example:
    >>> from duin.signal_store import save_recording, load_recording
    >>> save_recording(rec, "runs/sub01.duin")
    >>> loaded = load_recording("runs/sub01.duin")
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from .recording import ChannelMeta, Recording, TrialAnnotation

# Configure logging
logger = logging.getLogger(__name__)

MAGIC = b"DUIN"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHIdQ")
PAYLOAD_DTYPE = np.dtype("<f4")


class SignalStoreError(Exception):
    """Base exception for recording storage and dataset errors."""

    pass


class RecordingFormatError(SignalStoreError):
    """Raised when a recording file is malformed (bad magic, truncated, wrong version)."""

    pass


def sidecar_path(path: str | Path) -> Path:
    """Return the manifest path that accompanies a recording file."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def encode_header(n_channels: int, sample_rate_hz: float, n_samples: int) -> bytes:
    """Pack the fixed 28-byte recording header."""
    return HEADER.pack(MAGIC, FORMAT_VERSION, 0, n_channels, sample_rate_hz, n_samples)


def save_recording(rec: Recording, path: str | Path) -> None:
    """
    Save a recording to the binary format plus its JSON sidecar.

    The payload is written as float32; float64 recordings are narrowed.

    Args:
        rec: Recording to save.
        path: Destination of the binary file.

    Raises:
        SignalStoreError: If the data is non-finite or writing fails.
    """
    payload = np.ascontiguousarray(rec.data, dtype=PAYLOAD_DTYPE)
    if not np.all(np.isfinite(payload)):
        raise SignalStoreError("Refusing to save recording with non-finite data")

    manifest = {
        "subject_id": rec.subject_id,
        "channels": [ch.to_dict() for ch in rec.channels],
        "trials": [t.to_dict() for t in rec.trials],
        "label_names": list(rec.label_names),
    }

    try:
        filepath = Path(path)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with filepath.open("wb") as f:
            f.write(encode_header(rec.n_channels, float(rec.sample_rate_hz), rec.n_samples))
            f.write(payload.tobytes(order="C"))
        with sidecar_path(filepath).open("w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, ensure_ascii=False)

        logger.info(
            f"Recording saved to: {filepath} ({rec.n_channels} ch x {rec.n_samples} samples)"
        )

    except OSError as e:
        error_msg = f"Failed to save recording: {e}"
        logger.error(error_msg)
        raise SignalStoreError(error_msg) from e


def load_recording(path: str | Path) -> Recording:
    """
    Load a recording written by :func:`save_recording`.

    Args:
        path: Path to the binary file.

    Returns:
        The recording, with float32 data.

    Raises:
        RecordingFormatError: On bad magic, version mismatch or truncated payload.
        SignalStoreError: If the files cannot be read or the manifest is invalid.
    """
    filepath = Path(path)
    try:
        raw = filepath.read_bytes()
        if len(raw) < HEADER.size:
            raise RecordingFormatError(f"truncated header in {filepath}")

        magic, version, _flags, n_channels, sample_rate, n_samples = HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise RecordingFormatError(f"bad magic {magic!r} in {filepath}")
        if version != FORMAT_VERSION:
            raise RecordingFormatError(
                f"version mismatch in {filepath}: file has {version}, expected {FORMAT_VERSION}"
            )

        expected = n_channels * n_samples * PAYLOAD_DTYPE.itemsize
        body = raw[HEADER.size :]
        if len(body) < expected:
            raise RecordingFormatError(
                f"truncated payload in {filepath}: {len(body)} of {expected} bytes"
            )
        data = np.frombuffer(body, dtype=PAYLOAD_DTYPE, count=n_channels * n_samples)
        data = data.reshape(n_channels, n_samples).astype(np.float32)

        with sidecar_path(filepath).open(encoding="utf-8") as f:
            manifest = json.load(f)

        rec = Recording(
            subject_id=manifest["subject_id"],
            sample_rate_hz=float(sample_rate),
            channels=[ChannelMeta.from_dict(c) for c in manifest["channels"]],
            data=data,
            trials=[TrialAnnotation.from_dict(t) for t in manifest.get("trials", [])],
            label_names=list(manifest.get("label_names", [])),
        )
        logger.info(f"Recording loaded from: {filepath}")
        return rec

    except SignalStoreError:
        # Re-raise our own exceptions
        raise

    except OSError as e:
        error_msg = f"Failed to load recording: {e}"
        logger.error(error_msg)
        raise SignalStoreError(error_msg) from e

    except (json.JSONDecodeError, KeyError, ValueError) as e:
        error_msg = f"Invalid recording manifest for {filepath}: {e}"
        logger.error(error_msg)
        raise SignalStoreError(error_msg) from e
