"""
MAE Training Module

Stage-2 masked patch modeling. The trainable encoder starts from a fresh
random initialization; targets come from a frozen VQ-VAE (codex indices or
encoder embeddings) or from the raw patches.
"""

import copy
import logging
from pathlib import Path
from typing import Any

import torch

from ..config import MaeTrainConfig
from ..model import DuinMAE, DuinVQVAE, patchify, sample_batch_mask
from ..numeric import CosineWarmupSchedule, adamw_step, backward, build_optimizer, set_lr
from ..runtime.checkpoint import save_checkpoint
from ..signal_store import PretrainDataset
from .common import PrerequisiteError, Stream, as_tensor, check_loss, stream_rng
from .metrics import MetricsWriter, RunningMean
from .vqvae import TrainHistory

# Configure logging
logger = logging.getLogger(__name__)


def freeze(model: torch.nn.Module) -> torch.nn.Module:
    """Inference mode with every parameter excluded from optimization."""
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def target_indices(x: torch.Tensor, vqvae: DuinVQVAE) -> torch.Tensor:
    """Codex indices of the unmasked sample under a frozen VQ-VAE, shape (B, N)."""
    return vqvae.code_indices(x)


@torch.no_grad()
def compute_targets(
    x: torch.Tensor, kind: str, vqvae: DuinVQVAE | None, window: int
) -> torch.Tensor:
    """
    Prediction targets for every patch of ``x``.

    Raises:
        PrerequisiteError: If a VQ-VAE target is requested without a VQ-VAE.
    """
    if kind == "raw":
        patches = patchify(x, window)
        return patches.reshape(patches.shape[0], patches.shape[1], -1)
    if vqvae is None:
        raise PrerequisiteError(f"MAE target {kind!r} needs a trained VQ-VAE checkpoint")
    if kind == "codex":
        return target_indices(x, vqvae)
    return vqvae.encoder(x)


def mae_output_dim(kind: str, n_codex: int, d_model: int, n_channels: int, window: int) -> int:
    if kind == "codex":
        return n_codex
    if kind == "embedding":
        return d_model
    return n_channels * window


def train_mae(
    model: DuinMAE,
    dataset: PretrainDataset,
    train_cfg: MaeTrainConfig,
    vqvae: DuinVQVAE | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    writer: MetricsWriter | None = None,
    config_echo: dict[str, Any] | None = None,
) -> TrainHistory:
    """
    Train the masked model with (optionally symmetric) masking.

    Targets are computed on the fly from the frozen VQ-VAE and cached per
    segment when augmentation is off, since the samples are then fixed.

    Returns:
        TrainHistory monitored on the epoch-mean loss; records carry the
        masked-token top-1 accuracy for codex targets.
    """
    writer = writer or MetricsWriter()
    if vqvae is not None:
        freeze(vqvae)
    schedule = CosineWarmupSchedule(
        train_cfg.max_lr, train_cfg.min_lr, train_cfg.warmup_epochs, train_cfg.epochs
    )
    optimizer = build_optimizer(model.named_parameters(), schedule.lr(0), train_cfg.weight_decay)
    data_rng = stream_rng(seed, Stream.MAE_DATA)
    mask_rng = stream_rng(seed, Stream.MAE_MASK)
    window = model.encoder.cfg.window
    cache: dict[int, torch.Tensor] = {}

    history = TrainHistory(monitor="loss")
    best_state: dict[str, torch.Tensor] | None = None
    logger.info(
        f"Training MAE: target={train_cfg.target}, mask_ratio={train_cfg.mask_ratio}, "
        f"symmetric={train_cfg.symmetric}, {train_cfg.epochs} epochs"
    )

    for epoch in range(train_cfg.epochs):
        set_lr(optimizer, schedule.lr(epoch))
        model.train()
        running = RunningMean()
        correct = total = 0
        for step, (idx, batch) in enumerate(dataset.batches(train_cfg.batch_size, data_rng)):
            x = as_tensor(batch)
            if dataset.augment:
                target = compute_targets(x, train_cfg.target, vqvae, window)
            else:
                missing = [int(i) for i in idx if int(i) not in cache]
                if missing:
                    fresh = compute_targets(x, train_cfg.target, vqvae, window)
                    for row, i in enumerate(idx):
                        cache.setdefault(int(i), fresh[row])
                target = torch.stack([cache[int(i)] for i in idx])

            n_patches = x.shape[-1] // window
            mask = sample_batch_mask(x.shape[0], n_patches, train_cfg.mask_ratio, mask_rng)
            loss, passes = model.symmetric_loss(x, target, mask, symmetric=train_cfg.symmetric)
            check_loss(loss, "mae", epoch, step)
            backward(loss)
            adamw_step(optimizer)

            running.add(x.shape[0], loss=float(loss.detach()))
            correct += sum(p.correct for p in passes)
            total += sum(p.total for p in passes)

        metrics = running.means()
        if train_cfg.target == "codex":
            metrics["accuracy"] = correct / total if total else 0.0
        record = writer.write(epoch=epoch, split="train", lr=schedule.lr(epoch), **metrics)
        history.epochs.append(record)
        logger.info(
            f"mae epoch {epoch}: loss={record['loss']:.4f}"
            + (f" acc={record['accuracy']:.2%}" if "accuracy" in record else "")
        )
        if record["loss"] < history.best_value:
            history.best_value = record["loss"]
            history.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    if out_dir is not None:
        out = Path(out_dir)
        final = save_checkpoint(
            model, out / "mae", "mae", config_echo, train_cfg.epochs - 1, history.epochs[-1]
        )
        history.checkpoints["final"] = str(final)
        if best_state is not None:
            best = save_checkpoint(
                best_state,
                out / "mae-best",
                "mae",
                config_echo,
                history.best_epoch,
                history.epochs[history.best_epoch],
            )
            history.checkpoints["best"] = str(best)
    return history
