"""
Filters Module

Zero-phase band-pass and notch filtering and polyphase resampling of
recordings. All stages operate on every channel at once along the time axis;
channels never interact, so results do not depend on channel order.

Example:
    >>> from duin.preprocess import bandpass, notch, resample
    >>> rec = bandpass(rec, 0.5, 200.0)
    >>> rec = notch(rec, 50.0, 35.0)
    >>> rec = resample(rec, 1000.0)
"""

import logging
from fractions import Fraction

import numpy as np
from scipy import signal

from ..signal_store import Recording

# Configure logging
logger = logging.getLogger(__name__)

BUTTERWORTH_ORDER = 4
NOTCH_Q = 35.0
RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_KAISER_BETA = 8.0
MAX_RATIO_DENOMINATOR = 1000


class PreprocessError(Exception):
    """Base exception for signal conditioning errors."""

    pass


class FilterSpecError(PreprocessError):
    """Raised when a filter or resampling request is not realizable."""

    pass


def _nyquist(rec: Recording) -> float:
    return rec.sample_rate_hz / 2.0


def bandpass(
    rec: Recording, low_hz: float, high_hz: float, order: int = BUTTERWORTH_ORDER
) -> Recording:
    """
    Zero-phase Butterworth band-pass.

    The filter is designed as second-order sections and run forward and
    backward, so the effective magnitude response is squared and the phase
    is zero. Length is preserved.

    Args:
        rec: Input recording.
        low_hz: Lower band edge.
        high_hz: Upper band edge.
        order: Butterworth order per band edge.

    Returns:
        Filtered recording with the input dtype.

    Raises:
        FilterSpecError: If the band is empty or reaches Nyquist.
    """
    nyquist = _nyquist(rec)
    if not 0.0 < low_hz < high_hz < nyquist:
        raise FilterSpecError(
            f"Band [{low_hz}, {high_hz}] Hz must satisfy 0 < low < high < Nyquist ({nyquist} Hz)"
        )
    sos = signal.butter(order, [low_hz, high_hz], btype="band", fs=rec.sample_rate_hz, output="sos")
    filtered = signal.sosfiltfilt(sos, rec.data.astype(np.float64), axis=1)
    logger.debug(f"Band-pass {low_hz}-{high_hz} Hz applied to {rec.n_channels} channels")
    return rec.with_data(filtered.astype(rec.data.dtype))


def notch(rec: Recording, notch_hz: float, q: float = NOTCH_Q) -> Recording:
    """
    Zero-phase second-order IIR notch.

    Args:
        rec: Input recording.
        notch_hz: Center frequency to reject.
        q: Quality factor (center / -3 dB width).

    Returns:
        Filtered recording with the input dtype.

    Raises:
        FilterSpecError: If the notch is not strictly inside (0, Nyquist) or q <= 0.
    """
    nyquist = _nyquist(rec)
    if not 0.0 < notch_hz < nyquist:
        raise FilterSpecError(f"Notch {notch_hz} Hz must lie inside (0, Nyquist = {nyquist} Hz)")
    if q <= 0:
        raise FilterSpecError(f"Notch quality factor must be positive, got {q}")
    b, a = signal.iirnotch(notch_hz, q, fs=rec.sample_rate_hz)
    filtered = signal.filtfilt(b, a, rec.data.astype(np.float64), axis=1)
    logger.debug(f"Notch at {notch_hz} Hz (Q={q}) applied to {rec.n_channels} channels")
    return rec.with_data(filtered.astype(rec.data.dtype))


def resampling_ratio(source_hz: float, target_hz: float) -> tuple[int, int]:
    """
    Reduce target/source to a rational up/down pair.

    Args:
        source_hz: Current sample rate.
        target_hz: Requested sample rate.

    Returns:
        Tuple (up, down) in lowest terms.

    Raises:
        FilterSpecError: If the ratio needs a denominator above 1000, or
            upsampling is requested by a non-integer factor.
    """
    if target_hz <= 0:
        raise FilterSpecError(f"Target rate must be positive, got {target_hz}")
    exact = target_hz / source_hz
    ratio = Fraction(exact).limit_denominator(MAX_RATIO_DENOMINATOR)
    if abs(float(ratio) - exact) > 1e-9 * exact:
        raise FilterSpecError(
            f"Resampling ratio {target_hz}/{source_hz} is not reducible with "
            f"denominator <= {MAX_RATIO_DENOMINATOR}"
        )
    up, down = ratio.numerator, ratio.denominator
    if up > down and down != 1:
        raise FilterSpecError(
            f"Upsampling {source_hz} -> {target_hz} Hz is only supported by integer factors"
        )
    return up, down


def resample(rec: Recording, target_rate_hz: float) -> Recording:
    """
    Polyphase resampling with a Kaiser-windowed sinc anti-aliasing filter.

    The output length is round(T * target / source) and trial annotations are
    rescaled to the new rate.

    Args:
        rec: Input recording.
        target_rate_hz: Requested sample rate.

    Returns:
        Resampled recording with the input dtype.

    Raises:
        FilterSpecError: If the ratio is not realizable.
    """
    up, down = resampling_ratio(rec.sample_rate_hz, target_rate_hz)
    if up == down:
        return rec.with_data(rec.data.copy())

    max_rate = max(up, down)
    taps = signal.firwin(
        RESAMPLE_TAPS_PER_PHASE * max_rate + 1,
        1.0 / max_rate,
        window=("kaiser", RESAMPLE_KAISER_BETA),
    )
    resampled = signal.resample_poly(rec.data.astype(np.float64), up, down, axis=1, window=taps)
    n_out = int(round(rec.n_samples * up / down))
    resampled = resampled[:, :n_out]

    logger.debug(
        f"Resampled {rec.sample_rate_hz} -> {target_rate_hz} Hz "
        f"({rec.n_samples} -> {n_out} samples, up={up}, down={down})"
    )
    return rec.with_data(resampled.astype(rec.data.dtype), sample_rate_hz=float(target_rate_hz))
