"""
Downstream Module

Classification fine-tuning from one of four encoder initializations,
evaluation, and the top-k channel-count sweep.

Init modes:
    random: fresh encoder.
    vqvae: encoder loaded from a VQ-VAE checkpoint.
    vqvae_vq: as vqvae, with the frozen quantizer between encoder and head.
    mae: encoder loaded from an MAE checkpoint.

Example:
    >>> model = init_classifier("mae", cfg, n_classes=8, n_patches=30, mae_ckpt=ckpt)
    >>> result = finetune(model, train_ds, val_ds, cfg.finetune, seed=cfg.seed)
    >>> evaluate(model, test_ds).top1
"""

import copy
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch

from ..config import FinetuneConfig, RunConfig
from ..model import DuinClassifier
from ..numeric import (
    CosineWarmupSchedule,
    adamw_step,
    backward,
    build_optimizer,
    seed_everything,
    set_lr,
    softmax_cross_entropy,
)
from ..runtime.checkpoint import Checkpoint, load_into, save_checkpoint
from ..signal_store import (
    Recording,
    SplitSpec,
    TrialDataset,
    extract_trial_samples,
    select_channels,
    split_dataset,
)
from .common import PrerequisiteError, Stream, as_tensor, check_loss, stream_rng
from .contribution import ContributionScores, select_top_channels
from .metrics import EvalMetrics, MetricsWriter, RunningMean, classification_metrics

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class FinetuneResult:
    """Curves of a fine-tuning run and the epoch chosen on validation accuracy."""

    epochs: list[dict[str, Any]] = field(default_factory=list)
    best_epoch: int = -1
    best_val_top1: float = -1.0
    checkpoint: str | None = None

    def curve(self, key: str) -> list[float]:
        return [e[key] for e in self.epochs]


@dataclass
class TrialSplits:
    train: TrialDataset
    val: TrialDataset
    test: TrialDataset
    n_classes: int
    n_patches: int


def build_trial_splits(rec: Recording, cfg: RunConfig) -> TrialSplits:
    """Cut trials from a recording, split them and wrap the splits as datasets."""
    samples = extract_trial_samples(rec, rec.trials, cfg.data.trial_seconds)
    train, val, test = split_dataset(
        samples, SplitSpec(tuple(cfg.data.split_fractions), cfg.data.split_seed)
    )
    rate = rec.sample_rate_hz
    n_classes = len(rec.label_names) or (max(s.label for s in samples) + 1)
    return TrialSplits(
        train=TrialDataset(train, rate, cfg.data.augment_trials, cfg.data.max_shift_seconds),
        val=TrialDataset(val, rate),
        test=TrialDataset(test, rate),
        n_classes=n_classes,
        n_patches=samples[0].n_samples // cfg.encoder.window,
    )


def init_classifier(
    mode: str,
    cfg: RunConfig,
    n_classes: int,
    n_patches: int,
    vqvae_ckpt: Checkpoint | None = None,
    mae_ckpt: Checkpoint | None = None,
) -> DuinClassifier:
    """
    Build a classifier and load its encoder according to ``mode``.

    The label head is always fresh.

    Raises:
        PrerequisiteError: If the mode needs a checkpoint that was not given.
        CheckpointError: On shape mismatch between checkpoint and config.
    """
    needs_vqvae = mode in ("vqvae", "vqvae_vq")
    if needs_vqvae and vqvae_ckpt is None:
        raise PrerequisiteError(f"Init mode {mode!r} needs a VQ-VAE checkpoint")
    if mode == "mae" and mae_ckpt is None:
        raise PrerequisiteError("Init mode 'mae' needs an MAE checkpoint")

    model = DuinClassifier.from_config(
        cfg.encoder,
        n_classes=n_classes,
        n_patches=n_patches,
        hidden=cfg.finetune.head_hidden,
        quantizer_cfg=cfg.quantizer if mode == "vqvae_vq" else None,
    )
    source = mae_ckpt if mode == "mae" else vqvae_ckpt
    if source is not None and mode != "random":
        load_into(model.encoder, source, prefix="encoder.")
        if model.quantizer is not None:
            load_into(model.quantizer, source, prefix="quantizer.")
    logger.info(f"Classifier initialized (mode={mode}, classes={n_classes}, patches={n_patches})")
    return model


@torch.no_grad()
def predict_logits(
    model: DuinClassifier, dataset: TrialDataset, batch_size: int = 64
) -> tuple[torch.Tensor, torch.Tensor]:
    model.eval()
    rng = np.random.default_rng(0)
    logits, labels = [], []
    for data, y in dataset.batches(batch_size, rng, shuffle=False):
        logits.append(model(as_tensor(data)))
        labels.append(torch.from_numpy(y))
    if not logits:
        raise ValueError("Cannot evaluate an empty set")
    return torch.cat(logits), torch.cat(labels)


def evaluate(model: DuinClassifier, dataset: TrialDataset, batch_size: int = 64) -> EvalMetrics:
    """Top-1 accuracy and mean cross-entropy on a labeled set."""
    logits, labels = predict_logits(model, dataset, batch_size)
    return classification_metrics(logits, labels)


def finetune(
    model: DuinClassifier,
    train: TrialDataset,
    val: TrialDataset,
    train_cfg: FinetuneConfig,
    seed: int = 0,
    out_dir: str | Path | None = None,
    writer: MetricsWriter | None = None,
    config_echo: dict[str, Any] | None = None,
) -> FinetuneResult:
    """
    Full fine-tuning with cross-entropy; keeps the weights of the epoch with
    the highest validation accuracy and restores them at the end.

    Returns:
        FinetuneResult with train/val curves and the selected epoch.
    """
    writer = writer or MetricsWriter()
    schedule = CosineWarmupSchedule(
        train_cfg.max_lr, train_cfg.min_lr, train_cfg.warmup_epochs, train_cfg.epochs
    )
    optimizer = build_optimizer(model.named_parameters(), schedule.lr(0), train_cfg.weight_decay)
    rng = stream_rng(seed, Stream.FINETUNE_DATA)
    result = FinetuneResult()
    best_state: dict[str, torch.Tensor] | None = None

    for epoch in range(train_cfg.epochs):
        set_lr(optimizer, schedule.lr(epoch))
        model.train()
        running = RunningMean()
        for step, (data, labels) in enumerate(train.batches(train_cfg.batch_size, rng)):
            logits = model(as_tensor(data))
            loss = softmax_cross_entropy(logits, torch.from_numpy(labels))
            check_loss(loss, "finetune", epoch, step)
            backward(loss)
            adamw_step(optimizer)
            hits = float((logits.detach().argmax(dim=1).numpy() == labels).mean())
            running.add(len(labels), ce=float(loss.detach()), top1=hits)

        train_metrics = running.means()
        val_metrics = evaluate(model, val, train_cfg.batch_size)
        writer.write(epoch=epoch, split="train", lr=schedule.lr(epoch), **train_metrics)
        record = writer.write(epoch=epoch, split="val", top1=val_metrics.top1, ce=val_metrics.ce)
        result.epochs.append(
            {
                "epoch": epoch,
                "train_ce": train_metrics.get("ce", float("nan")),
                "train_top1": train_metrics.get("top1", float("nan")),
                "val_top1": record["top1"],
                "val_ce": record["ce"],
            }
        )
        logger.info(
            f"finetune epoch {epoch}: train_ce={train_metrics.get('ce', float('nan')):.4f} "
            f"val_top1={val_metrics.top1:.2%}"
        )
        if val_metrics.top1 > result.best_val_top1:
            result.best_val_top1 = val_metrics.top1
            result.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    if best_state is not None:
        model.load_state_dict(best_state)
    if out_dir is not None:
        path = save_checkpoint(
            model,
            Path(out_dir) / "classifier",
            "classifier",
            config_echo,
            result.best_epoch,
            {"val_top1": result.best_val_top1},
        )
        result.checkpoint = str(path)
    return result


def channel_count_sweep(
    rec: Recording,
    cfg: RunConfig,
    scores: ContributionScores,
    counts: Sequence[int] | None = None,
    writer: MetricsWriter | None = None,
) -> list[dict[str, Any]]:
    """
    Retrain a randomly initialized classifier on the top-k channels for each k.

    Counts above the channel count are skipped.

    Returns:
        One record {n_channels, channels, top1, ce} per evaluated k.
    """
    results = []
    for k in counts or cfg.finetune.channel_counts:
        if k > rec.n_channels:
            logger.info(f"Skipping channel count {k} > {rec.n_channels}")
            continue
        channels = select_top_channels(scores.scores, k)
        sub_cfg = cfg.model_copy(
            update={"encoder": cfg.encoder.model_copy(update={"n_channels": k})}
        )
        splits = build_trial_splits(select_channels(rec, channels), sub_cfg)
        seed_everything(cfg.seed)
        model = init_classifier("random", sub_cfg, splits.n_classes, splits.n_patches)
        finetune(model, splits.train, splits.val, cfg.finetune, seed=cfg.seed)
        metrics = evaluate(model, splits.test)
        record = {"n_channels": k, "channels": channels, "top1": metrics.top1, "ce": metrics.ce}
        if writer is not None:
            writer.write(epoch=cfg.finetune.epochs - 1, split="channel_sweep", **record)
        logger.info(f"Top-{k} channels: test top1={metrics.top1:.2%}")
        results.append(record)
    return results
