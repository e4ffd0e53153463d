"""
Optimizer Module

AdamW with decoupled weight decay and an epoch-granular linear-warmup cosine
learning-rate schedule.

Example:
    >>> schedule = CosineWarmupSchedule(max_lr=3e-4, min_lr=5e-5, warmup_epochs=40, total_epochs=400)
    >>> optimizer = build_optimizer(model.named_parameters(), lr=schedule.lr(0), weight_decay=0.01)
    >>> for epoch in range(schedule.total_epochs):
    ...     set_lr(optimizer, schedule.lr(epoch))
    ...     loss.backward()
    ...     adamw_step(optimizer)
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

import torch
from torch.optim import AdamW

# Configure logging
logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.99)
ADAM_EPS = 1e-8
NO_DECAY_NAMES = frozenset({"mask_token"})


@dataclass(frozen=True)
class CosineWarmupSchedule:
    """
    Linear warmup from 0 to ``max_lr`` followed by cosine decay to ``min_lr``.

    Attributes:
        max_lr: Peak learning rate, reached at the end of warmup.
        min_lr: Floor of the cosine decay.
        warmup_epochs: Length of the linear ramp.
        total_epochs: Number of epochs in the run.
    """

    max_lr: float
    min_lr: float
    warmup_epochs: int
    total_epochs: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_lr <= self.max_lr:
            raise ValueError(f"Need 0 <= min_lr <= max_lr, got {self.min_lr}, {self.max_lr}")
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ValueError(
                f"Need 0 <= warmup_epochs < total_epochs, got {self.warmup_epochs}, "
                f"{self.total_epochs}"
            )

    def lr(self, epoch: int) -> float:
        return cosine_warmup_lr(self, epoch)


def cosine_warmup_lr(schedule: CosineWarmupSchedule, epoch: int) -> float:
    """
    Learning rate for ``epoch``.

    Args:
        schedule: Schedule parameters.
        epoch: Epoch index in [0, total_epochs).

    Returns:
        max_lr * epoch / warmup during warmup, then
        min_lr + (max_lr - min_lr) * (1 + cos(pi * t)) / 2 with
        t = (epoch - warmup) / (total - warmup).

    Raises:
        ValueError: If epoch is out of range.
    """
    if not 0 <= epoch < schedule.total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {schedule.total_epochs})")
    if epoch < schedule.warmup_epochs:
        return schedule.max_lr * epoch / schedule.warmup_epochs
    progress = (epoch - schedule.warmup_epochs) / (schedule.total_epochs - schedule.warmup_epochs)
    cosine = 0.5 * (1.0 + math.cos(math.pi * progress))
    return schedule.min_lr + (schedule.max_lr - schedule.min_lr) * cosine


def build_optimizer(
    named_params: Iterable[tuple[str, torch.nn.Parameter]],
    lr: float,
    weight_decay: float,
    betas: tuple[float, float] = ADAM_BETAS,
    eps: float = ADAM_EPS,
) -> AdamW:
    """
    AdamW over the trainable parameters in ``named_params``.

    Matrices and kernels are decayed. Biases, norm gains and the other
    vectors, plus learned tokens named in NO_DECAY_NAMES, go to a group with
    weight_decay 0. Frozen parameters (requires_grad False) are left out.

    Args:
        named_params: (name, parameter) pairs, usually ``model.named_parameters()``.
        lr: Initial learning rate.
        weight_decay: Decay of the decayed group.
        betas: Adam moment coefficients.
        eps: Adam denominator epsilon.

    Returns:
        AdamW with the decayed group first and the no-decay group second;
        an empty group is omitted.
    """
    decay: list[torch.nn.Parameter] = []
    no_decay: list[torch.nn.Parameter] = []
    for name, param in named_params:
        if not param.requires_grad:
            continue
        if param.ndim <= 1 or name.rsplit(".", 1)[-1] in NO_DECAY_NAMES:
            no_decay.append(param)
        else:
            decay.append(param)
    if not decay and not no_decay:
        raise ValueError("No trainable parameters to optimize")

    groups = [
        {"params": params, "weight_decay": wd}
        for params, wd in ((decay, weight_decay), (no_decay, 0.0))
        if params
    ]
    logger.debug(
        f"AdamW over {sum(p.numel() for p in decay)} decayed and "
        f"{sum(p.numel() for p in no_decay)} undecayed parameters "
        f"(lr={lr}, wd={weight_decay}, betas={betas})"
    )
    return AdamW(groups, lr=lr, betas=betas, eps=eps, weight_decay=weight_decay)


def set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def adamw_step(optimizer: torch.optim.Optimizer) -> None:
    """Apply one update and zero the gradients it consumed."""
    optimizer.step()
    optimizer.zero_grad(set_to_none=False)
