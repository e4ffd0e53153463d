"""
Metrics Module

Per-epoch metric records, the ``metrics.jsonl`` writer, classification
metrics and multi-seed summaries.

Example:
    >>> with MetricsWriter("runs/a/metrics.jsonl") as writer:
    ...     writer.write(epoch=0, split="train", loss=1.23)
"""

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
import torch
import torch.nn.functional as F

# Configure logging
logger = logging.getLogger(__name__)


class MetricsWriter:
    """Appends one JSON object per line. A writer without a path only logs."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._file = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._file = self.path.open("a", encoding="utf-8")

    def write(self, epoch: int, split: str, **metrics: Any) -> dict[str, Any]:
        record = {"epoch": epoch, "split": split, **metrics}
        if self._file is not None:
            self._file.write(json.dumps(record, sort_keys=True) + "\n")
            self._file.flush()
        logger.debug(f"metrics {record}")
        return record

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def read_metrics(path: str | Path) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


class RunningMean:
    """Mean of named scalars, weighted by sample count."""

    def __init__(self) -> None:
        self.sums: dict[str, float] = {}
        self.count = 0

    def add(self, n: int, **values: float) -> None:
        for k, v in values.items():
            self.sums[k] = self.sums.get(k, 0.0) + float(v) * n
        self.count += n

    def means(self) -> dict[str, float]:
        return {k: v / self.count for k, v in self.sums.items()} if self.count else {}


@dataclass
class EvalMetrics:
    """Top-1 accuracy and mean cross-entropy over a labeled set."""

    top1: float
    ce: float
    n_samples: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def classification_metrics(logits: torch.Tensor, labels: torch.Tensor) -> EvalMetrics:
    """
    Top-1 accuracy and cross-entropy of stacked logits.

    Raises:
        ValueError: For an empty set.
    """
    if labels.numel() == 0:
        raise ValueError("Cannot evaluate an empty set")
    logits = logits.double()
    top1 = float((logits.argmax(dim=1) == labels).double().mean())
    ce = float(F.cross_entropy(logits, labels.long()))
    return EvalMetrics(top1=top1, ce=ce, n_samples=int(labels.numel()))


def summarize_seeds(runs: Sequence[dict[str, float]]) -> dict[str, dict[str, float]]:
    """
    Mean, sample std and standard error of every metric across seeds.

    Args:
        runs: One metrics mapping per seed.

    Returns:
        Mapping metric -> {"mean", "std", "stderr", "n"}.
    """
    if not runs:
        return {}
    summary = {}
    for key in sorted(set().union(*runs)):
        values = np.array([r[key] for r in runs if key in r], dtype=np.float64)
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        summary[key] = {
            "mean": float(values.mean()),
            "std": std,
            "stderr": std / math.sqrt(values.size),
            "n": int(values.size),
        }
    return summary
