"""
Masked Modeling Module

Masked patch modeling on top of the encoder: a random subset of patch
embeddings is replaced by a shared learnable mask token before the temporal
embedding is added, and a linear head predicts a target for every patch.
Losses only count masked positions; with symmetric masking the complement
mask is run as a second pass and both losses are summed.

Targets:
    codex: codex indices from a frozen VQ-VAE (cross-entropy).
    embedding: frozen VQ-VAE encoder embeddings (1 - cosine similarity).
    raw: the raw patch values, flattened over channels and time (MSE).
"""

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..config import EncoderConfig
from ..config.schema import MaeTarget
from ..numeric import mse, softmax_cross_entropy
from .encoder import DuinEncoder
from .layers import ModelError

# Configure logging
logger = logging.getLogger(__name__)

MASK_TOKEN_STD = 0.02


def mask_count(n_patches: int, ratio: float) -> int:
    """round(ratio * N), rounding halves up."""
    return int(np.floor(ratio * n_patches + 0.5))


def sample_mask(n_patches: int, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """
    Uniformly random mask of round(ratio * N) positions.

    Args:
        n_patches: Sequence length N (>= 2).
        ratio: Mask ratio in (0, 1).
        rng: Random generator.

    Returns:
        Boolean array of length N, True at masked positions.

    Raises:
        ModelError: If the mask would be empty or cover every position.
    """
    m = mask_count(n_patches, ratio)
    if m <= 0 or m >= n_patches:
        raise ModelError(f"Mask ratio {ratio} masks {m} of {n_patches} patches")
    mask = np.zeros(n_patches, dtype=bool)
    mask[rng.choice(n_patches, size=m, replace=False)] = True
    return mask


def sample_batch_mask(
    batch_size: int, n_patches: int, ratio: float, rng: np.random.Generator
) -> torch.Tensor:
    """Independent masks for every sample, shape (B, N)."""
    return torch.from_numpy(np.stack([sample_mask(n_patches, ratio, rng) for _ in range(batch_size)]))


def apply_mask(e_p: torch.Tensor, mask: torch.Tensor, token: torch.Tensor) -> torch.Tensor:
    """Replace masked rows of (B, N, d) embeddings by ``token``; other rows pass through."""
    return torch.where(mask.unsqueeze(-1), token.to(e_p.dtype).expand_as(e_p), e_p)


@dataclass
class MaskedLoss:
    loss: torch.Tensor
    correct: int
    total: int


def masked_loss(
    prediction: torch.Tensor, target: torch.Tensor, mask: torch.Tensor, kind: MaeTarget
) -> MaskedLoss:
    """
    Loss over the masked positions of one pass, averaged over those positions.

    Args:
        prediction: Head output, shape (B, N, out).
        target: Indices (B, N) for codex targets, (B, N, out) otherwise.
        mask: Boolean mask (B, N).
        kind: Target kind.

    Returns:
        MaskedLoss with the loss and, for codex targets, top-1 hits.
    """
    pred = prediction[mask]
    tgt = target[mask]
    if kind == "codex":
        loss = softmax_cross_entropy(pred, tgt)
        correct = int((pred.argmax(dim=-1) == tgt).sum())
        return MaskedLoss(loss=loss, correct=correct, total=int(tgt.numel()))
    if kind == "embedding":
        loss = (1.0 - F.cosine_similarity(pred, tgt, dim=-1)).mean()
        return MaskedLoss(loss=loss, correct=0, total=int(tgt.shape[0]))
    return MaskedLoss(loss=mse(pred, tgt), correct=0, total=int(tgt.shape[0]))


class DuinMAE(nn.Module):
    """Encoder with a mask token and a per-patch prediction head."""

    def __init__(self, cfg: EncoderConfig, target: MaeTarget = "codex", out_dim: int = 2048):
        super().__init__()
        self.target = target
        self.encoder = DuinEncoder(cfg)
        self.mask_token = nn.Parameter(torch.randn(cfg.d_model) * MASK_TOKEN_STD)
        self.head = nn.Linear(cfg.d_model, out_dim)
        nn.init.trunc_normal_(self.head.weight, std=cfg.init_std)
        nn.init.zeros_(self.head.bias)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Predictions of shape (B, N, out_dim) for samples (B, C, T) under ``mask``."""
        e_p = self.encoder.spatial_encode(x)
        if mask.shape != e_p.shape[:2]:
            raise ModelError(f"Mask shape {tuple(mask.shape)} does not match {tuple(e_p.shape[:2])}")
        e = self.encoder.transform(self.encoder.add_temporal(apply_mask(e_p, mask, self.mask_token)))
        return self.head(e)

    def symmetric_loss(
        self, x: torch.Tensor, target: torch.Tensor, mask: torch.Tensor, symmetric: bool = True
    ) -> tuple[torch.Tensor, list[MaskedLoss]]:
        """
        Masked loss plus, when ``symmetric``, the loss of the complement mask.

        Each pass runs its own forward, so dropout noise is drawn independently.
        """
        passes = [masked_loss(self(x, mask), target, mask, self.target)]
        if symmetric:
            passes.append(masked_loss(self(x, ~mask), target, ~mask, self.target))
        total = passes[0].loss
        for p in passes[1:]:
            total = total + p.loss
        return total, passes
