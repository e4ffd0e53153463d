"""
Determinism Module

Seeding and thread configuration for reproducible runs.
"""

import logging
import random

import numpy as np
import torch

# Configure logging
logger = logging.getLogger(__name__)


def seed_everything(seed: int) -> None:
    """Seed Python, NumPy and torch global generators."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def configure_threads(n_threads: int) -> None:
    """
    Cap torch intra-op threads.

    With a single thread, deterministic algorithms are enforced so that
    training steps are bitwise reproducible for a fixed seed.
    """
    if n_threads < 1:
        raise ValueError(f"n_threads must be >= 1, got {n_threads}")
    torch.set_num_threads(n_threads)
    torch.use_deterministic_algorithms(n_threads == 1)
    logger.debug(f"torch threads={n_threads}, deterministic={n_threads == 1}")


def numpy_generator(seed: int, *stream: int) -> np.random.Generator:
    """A NumPy generator keyed on ``seed`` and an optional stream path."""
    return np.random.default_rng([seed, *stream])


def torch_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen
