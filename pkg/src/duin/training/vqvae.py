"""
VQ-VAE Training Module

Stage-1 training: reconstruct 4 s pre-training samples through the codex.
The loss is reconstruction MSE plus the commitment term; the codebook term
is reported but the codex follows its EMA update instead of gradients.

Example:
    >>> model = DuinVQVAE.from_config(cfg)
    >>> history = train_vqvae(model, dataset, cfg.vqvae, seed=cfg.seed, out_dir="runs/a")
    >>> len(history.epochs) == cfg.vqvae.epochs
    True
"""

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch

from ..config import VqvaeTrainConfig
from ..model import DuinVQVAE
from ..numeric import CosineWarmupSchedule, adamw_step, backward, build_optimizer, mse, set_lr
from ..runtime.checkpoint import save_checkpoint
from ..signal_store import PretrainDataset
from .common import Stream, as_tensor, check_loss, stream_generator, stream_rng
from .metrics import MetricsWriter, RunningMean

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    loss: float
    recon_mse: float
    commit: float
    codebook: float
    reseeded: int = 0


@dataclass
class TrainHistory:
    """Per-epoch training records and the best epoch by ``monitor``."""

    monitor: str
    epochs: list[dict[str, Any]] = field(default_factory=list)
    best_epoch: int = -1
    best_value: float = float("inf")
    checkpoints: dict[str, str] = field(default_factory=dict)

    def curve(self, key: str) -> list[float]:
        return [e[key] for e in self.epochs]


def vqvae_step(
    model: DuinVQVAE,
    x: torch.Tensor,
    optimizer: torch.optim.Optimizer,
    epoch: int = 0,
    step: int = 0,
    generator: torch.Generator | None = None,
) -> StepResult:
    """
    One training transaction: forward, backward, AdamW update, codex update.

    The codex moves by EMA (and dead rows are reseeded with ``generator``)
    only after the optimizer step, from the same batch's assignments.

    Raises:
        DivergenceError: If the loss is non-finite.
    """
    out = model(x)
    recon = mse(out.reconstruction, out.target)
    loss = recon + out.quantized.commit_loss
    check_loss(
        loss,
        "vqvae",
        epoch,
        step,
        recon_mse=float(recon.detach()),
        commit=float(out.quantized.commit_loss.detach()),
    )
    backward(loss)
    adamw_step(optimizer)
    reseeded = model.quantizer.update_codex(out.quantized, generator)
    return StepResult(
        loss=float(loss.detach()),
        recon_mse=float(recon.detach()),
        commit=float(out.quantized.commit_loss.detach()),
        codebook=float(out.quantized.codebook_loss.detach()),
        reseeded=reseeded,
    )


def train_vqvae(
    model: DuinVQVAE,
    dataset: PretrainDataset,
    train_cfg: VqvaeTrainConfig,
    seed: int = 0,
    out_dir: str | Path | None = None,
    writer: MetricsWriter | None = None,
    config_echo: dict[str, Any] | None = None,
) -> TrainHistory:
    """
    Train a VQ-VAE with the cosine warmup schedule.

    Args:
        model: Freshly built model.
        dataset: Pre-training samples.
        train_cfg: Optimization parameters.
        seed: Seed of the data stream.
        out_dir: Directory for the ``vqvae`` (final) and ``vqvae-best``
            checkpoints; nothing is saved when omitted.
        writer: Metrics sink.
        config_echo: Resolved config stored in checkpoint headers.

    Returns:
        TrainHistory monitored on the epoch-mean loss.
    """
    writer = writer or MetricsWriter()
    schedule = CosineWarmupSchedule(
        train_cfg.max_lr, train_cfg.min_lr, train_cfg.warmup_epochs, train_cfg.epochs
    )
    optimizer = build_optimizer(model.named_parameters(), schedule.lr(0), train_cfg.weight_decay)
    rng = stream_rng(seed, Stream.VQVAE_DATA)
    reseed_gen = stream_generator(seed, Stream.RESEED)
    steps_per_epoch = -(-len(dataset) // train_cfg.batch_size)
    model.quantizer.dead_code_threshold = model.quantizer.cfg.dead_code_epochs * steps_per_epoch

    history = TrainHistory(monitor="loss")
    best_state: dict[str, torch.Tensor] | None = None
    logger.info(
        f"Training VQ-VAE: {len(dataset)} samples, {train_cfg.epochs} epochs, "
        f"{steps_per_epoch} steps/epoch"
    )

    for epoch in range(train_cfg.epochs):
        set_lr(optimizer, schedule.lr(epoch))
        model.train()
        model.quantizer.reset_usage()
        running = RunningMean()
        reseeded = 0
        for step, (_, batch) in enumerate(dataset.batches(train_cfg.batch_size, rng)):
            result = vqvae_step(model, as_tensor(batch), optimizer, epoch, step, reseed_gen)
            reseeded += result.reseeded
            running.add(
                len(batch),
                loss=result.loss,
                recon_mse=result.recon_mse,
                commit=result.commit,
                codebook=result.codebook,
            )

        record = writer.write(
            epoch=epoch,
            split="train",
            lr=schedule.lr(epoch),
            utilization=model.quantizer.check_collapse(),
            perplexity=model.quantizer.perplexity(),
            reseeded=reseeded,
            **running.means(),
        )
        history.epochs.append(record)
        logger.info(
            f"vqvae epoch {epoch}: loss={record['loss']:.4f} recon={record['recon_mse']:.4f} "
            f"util={record['utilization']:.1%}"
        )
        if record["loss"] < history.best_value:
            history.best_value = record["loss"]
            history.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    if out_dir is not None:
        out = Path(out_dir)
        final = save_checkpoint(
            model, out / "vqvae", "vqvae", config_echo, train_cfg.epochs - 1, history.epochs[-1]
        )
        history.checkpoints["final"] = str(final)
        if best_state is not None:
            best = save_checkpoint(
                best_state,
                out / "vqvae-best",
                "vqvae",
                config_echo,
                history.best_epoch,
                history.epochs[history.best_epoch],
            )
            history.checkpoints["best"] = str(best)
    return history
