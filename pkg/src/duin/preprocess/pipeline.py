"""
Preprocessing Pipeline Module

Runs the signal-conditioning chain in its fixed order:
band-pass -> notch -> resample -> bipolar re-reference -> z-score.

Example:
    >>> from duin.preprocess import FilterSpec, run_pipeline
    >>> clean = run_pipeline(rec, FilterSpec())
    >>> clean.sample_rate_hz
    1000.0
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any

from ..signal_store import Recording
from .filters import BUTTERWORTH_ORDER, NOTCH_Q, FilterSpecError, bandpass, notch, resample
from .referencing import bipolar_reref, zscore

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterSpec:
    """
    Parameters of the conditioning chain.

    Attributes:
        low_hz: Band-pass lower edge.
        high_hz: Band-pass upper edge.
        notch_hz: Power-line frequency to reject; must lie inside the band.
        notch_q: Notch quality factor.
        target_rate_hz: Output sample rate.
        order: Butterworth order per band edge.
        bipolar: Apply bipolar re-referencing.
    """

    low_hz: float = 0.5
    high_hz: float = 200.0
    notch_hz: float = 50.0
    notch_q: float = NOTCH_Q
    target_rate_hz: float = 1000.0
    order: int = BUTTERWORTH_ORDER
    bipolar: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.low_hz < self.high_hz:
            raise ValueError(f"Need 0 < low_hz < high_hz, got {self.low_hz}, {self.high_hz}")
        if not self.low_hz < self.notch_hz < self.high_hz:
            raise ValueError(
                f"notch_hz {self.notch_hz} must lie inside ({self.low_hz}, {self.high_hz})"
            )
        if self.notch_q <= 0:
            raise ValueError(f"notch_q must be positive, got {self.notch_q}")
        if self.target_rate_hz <= 0:
            raise ValueError(f"target_rate_hz must be positive, got {self.target_rate_hz}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")

    def check_rate(self, sample_rate_hz: float) -> None:
        """
        Check the band against the Nyquist frequency of a source rate.

        Raises:
            FilterSpecError: If the band reaches Nyquist.
        """
        if self.high_hz >= sample_rate_hz / 2.0:
            raise FilterSpecError(
                f"high_hz {self.high_hz} must be below Nyquist ({sample_rate_hz / 2.0} Hz)"
            )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FilterSpec":
        return cls(**data)


def run_pipeline(rec: Recording, spec: FilterSpec) -> Recording:
    """
    Apply the full conditioning chain.

    Args:
        rec: Raw recording.
        spec: Filter parameters.

    Returns:
        Conditioned recording at ``spec.target_rate_hz`` with z-scored channels.

    Raises:
        FilterSpecError: If a filter or the resampling ratio is not realizable.
        ReferencingError: On single-contact electrodes or flat channels.
    """
    spec.check_rate(rec.sample_rate_hz)
    logger.info(
        f"Preprocessing {rec.subject_id}: {rec.n_channels} ch @ {rec.sample_rate_hz} Hz -> "
        f"{spec.target_rate_hz} Hz"
    )

    out = bandpass(rec, spec.low_hz, spec.high_hz, order=spec.order)
    out = notch(out, spec.notch_hz, spec.notch_q)
    out = resample(out, spec.target_rate_hz)
    if spec.bipolar:
        out = bipolar_reref(out)
    out = zscore(out)

    logger.info(
        f"Preprocessing done: {out.n_channels} ch x {out.n_samples} samples @ {out.sample_rate_hz} Hz"
    )
    return out
