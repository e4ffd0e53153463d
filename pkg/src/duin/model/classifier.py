"""
Classifier Module

Encoder plus label prediction head, optionally with a frozen quantizer in
between.

Example:
    >>> model = DuinClassifier.from_config(cfg.encoder, n_classes=8, n_patches=30)
    >>> model(torch.randn(4, 10, 3000)).shape
    torch.Size([4, 8])
"""

import logging
from functools import partial

import torch
from torch import nn

from ..config import EncoderConfig, QuantizerConfig
from ..numeric import activation
from .encoder import DuinEncoder
from .layers import PatchError, init_weights
from .quantizer import VectorQuantizer

# Configure logging
logger = logging.getLogger(__name__)


class LabelHead(nn.Module):
    """Flatten (B, N, d) -> linear -> ReLU -> linear -> (B, K)."""

    def __init__(self, in_width: int, hidden: int, n_classes: int):
        super().__init__()
        self.in_width = in_width
        self.hidden = nn.Linear(in_width, hidden)
        self.out = nn.Linear(hidden, n_classes)

    def forward(self, e: torch.Tensor) -> torch.Tensor:
        flat = e.reshape(e.shape[0], -1)
        if flat.shape[1] != self.in_width:
            raise PatchError(
                f"Label head expects {self.in_width} features, got {flat.shape[1]} "
                f"({e.shape[1]} patches)"
            )
        return self.out(activation(self.hidden(flat), "relu"))


class DuinClassifier(nn.Module):
    """
    Sequence classifier over encoded patches.

    With a quantizer attached, encoder outputs are replaced by their
    straight-through codex embeddings; the codex is frozen.
    """

    def __init__(
        self,
        encoder: DuinEncoder,
        head: LabelHead,
        quantizer: VectorQuantizer | None = None,
    ):
        super().__init__()
        self.encoder = encoder
        self.head = head
        self.quantizer = quantizer
        if quantizer is not None:
            quantizer.frozen = True

    @classmethod
    def from_config(
        cls,
        cfg: EncoderConfig,
        n_classes: int,
        n_patches: int,
        hidden: int = 128,
        quantizer_cfg: QuantizerConfig | None = None,
    ) -> "DuinClassifier":
        """
        Build a randomly initialized classifier.

        The head is created right after the encoder, so under one seed its
        initial weights do not depend on whether a quantizer follows.
        """
        encoder = DuinEncoder(cfg)
        head = LabelHead(n_patches * cfg.d_model, hidden, n_classes)
        head.apply(partial(init_weights, std=cfg.init_std))
        quantizer = (
            VectorQuantizer(cfg.d_model, quantizer_cfg) if quantizer_cfg is not None else None
        )
        return cls(encoder, head, quantizer)

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        e = self.encoder(x)
        if self.quantizer is not None:
            e = self.quantizer(e).embeddings
        return e

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Logits of shape (B, K) for samples of shape (B, C, T)."""
        return self.head(self.embed(x))

    def projection_weights(self) -> torch.Tensor:
        """Channel projection of the spatial encoder as a (C, D) matrix."""
        return self.encoder.spatial.projection.weight.detach().T.clone()
