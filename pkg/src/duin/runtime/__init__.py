"""
Runtime Module

Checkpoint persistence. Stage orchestration lives in ``duin.runtime.runner``.
"""

from .checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    CheckpointError,
    LoadReport,
    load_checkpoint,
    load_into,
    save_checkpoint,
)

__all__ = [
    "FORMAT_VERSION",
    "Checkpoint",
    "CheckpointError",
    "LoadReport",
    "load_checkpoint",
    "load_into",
    "save_checkpoint",
]
