"""
Training Common Module

Errors, random streams and tensor conversion shared by the training loops.
"""

import logging
from enum import IntEnum

import numpy as np
import torch

from ..numeric import numpy_generator, torch_generator

# Configure logging
logger = logging.getLogger(__name__)


class TrainingError(Exception):
    """Base exception for training loop errors."""

    pass


class DivergenceError(TrainingError):
    """Raised when a training loss becomes NaN or Inf."""

    pass


class PrerequisiteError(Exception):
    """Raised when a stage is missing an input it depends on (checkpoint, recording)."""

    pass


class Stream(IntEnum):
    """Independent random streams derived from the run seed."""

    VQVAE_DATA = 1
    MAE_DATA = 2
    MAE_MASK = 3
    FINETUNE_DATA = 4
    RESEED = 5


def stream_rng(seed: int, stream: Stream, *extra: int) -> np.random.Generator:
    return numpy_generator(seed, int(stream), *extra)


def stream_generator(seed: int, stream: Stream) -> torch.Generator:
    """A torch generator seeded from the NumPy stream of the same name."""
    return torch_generator(int(stream_rng(seed, stream).integers(0, 2**63 - 1)))


def as_tensor(batch: np.ndarray) -> torch.Tensor:
    """Stack of samples as a float32 tensor."""
    return torch.from_numpy(np.ascontiguousarray(batch, dtype=np.float32))


def check_loss(loss: torch.Tensor, stage: str, epoch: int, step: int, **diagnostics: float) -> None:
    """
    Abort on a non-finite loss.

    Raises:
        DivergenceError: With the stage, position and any diagnostics supplied.
    """
    if bool(torch.isfinite(loss.detach()).all()):
        return
    details = ", ".join(f"{k}={v:.4g}" for k, v in diagnostics.items())
    error_msg = f"{stage} loss diverged at epoch {epoch}, step {step}" + (
        f" ({details})" if details else ""
    )
    logger.error(error_msg)
    raise DivergenceError(error_msg)
