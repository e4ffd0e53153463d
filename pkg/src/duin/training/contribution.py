"""
Channel Contribution Module

Scores each recording channel by the mean absolute weight of its row in the
spatial encoder's channel projection, normalized by the maximum and scaled
by a performance weight, and selects the top-k channels.
"""

import csv
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class ContributionScores:
    """
    Per-channel contribution.

    Attributes:
        raw: Mean |row| of the projection matrix, one entry per channel.
        scores: raw / max(raw) * performance_weight.
        performance_weight: Multiplier p applied after normalization.
    """

    raw: np.ndarray
    scores: np.ndarray
    performance_weight: float = 1.0

    def ranking(self) -> list[int]:
        return select_top_channels(self.scores, len(self.scores))


def channel_contribution(
    weights: torch.Tensor | np.ndarray, performance_weight: float = 1.0
) -> ContributionScores:
    """
    Contribution scores from a (C, D) channel projection matrix.

    Args:
        weights: Projection with one row per input channel.
        performance_weight: Multiplier p (1 for single-run analysis).

    Returns:
        ContributionScores.

    Raises:
        ValueError: If every row is zero.
    """
    w = weights.detach().cpu().numpy() if isinstance(weights, torch.Tensor) else np.asarray(weights)
    w = w.astype(np.float64)
    if w.ndim != 2:
        raise ValueError(f"Projection weights must be 2D (C, D), got shape {w.shape}")
    raw = np.abs(w).mean(axis=1)
    peak = raw.max()
    if peak <= 0:
        raise ValueError("Projection weights are all zero; contribution is undefined")
    return ContributionScores(
        raw=raw, scores=raw / peak * performance_weight, performance_weight=performance_weight
    )


def select_top_channels(scores: Sequence[float] | np.ndarray, k: int) -> list[int]:
    """
    Indices of the k largest scores, descending, ties to the lower index.

    Raises:
        ValueError: If k exceeds the number of channels or is negative.
    """
    s = np.asarray(scores, dtype=np.float64)
    if not 0 <= k <= s.size:
        raise ValueError(f"Cannot select {k} of {s.size} channels")
    order = np.argsort(-s, kind="stable")
    return [int(i) for i in order[:k]]


def write_contrib_csv(path: str | Path, names: Sequence[str], scores: ContributionScores) -> Path:
    """Write ``channel_name,score,rank`` rows in channel order (rank 1 is best)."""
    ranks = {ch: r + 1 for r, ch in enumerate(scores.ranking())}
    filepath = Path(path)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with filepath.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["channel_name", "score", "rank"])
        for i, name in enumerate(names):
            writer.writerow([name, f"{scores.scores[i]:.6f}", ranks[i]])
    logger.info(f"Contribution scores written to: {filepath}")
    return filepath
