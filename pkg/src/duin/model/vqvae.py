"""
VQ-VAE Module

Encoder, quantizer and regressor assembled for signal reconstruction.

Example:
    >>> model = DuinVQVAE.from_config(cfg)
    >>> out = model(batch)
    >>> out.reconstruction.shape == batch.shape
    True
"""

import logging
from dataclasses import dataclass

import torch
from torch import nn

from ..config import RunConfig
from .encoder import DuinEncoder
from .quantizer import QuantizeResult, VectorQuantizer, quantize
from .regressor import Regressor

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class VqvaeOutput:
    reconstruction: torch.Tensor
    target: torch.Tensor
    quantized: QuantizeResult


class DuinVQVAE(nn.Module):
    """Reconstructs W * N samples from the codex rows chosen for N patches."""

    def __init__(self, encoder: DuinEncoder, quantizer: VectorQuantizer, regressor: Regressor):
        super().__init__()
        self.encoder = encoder
        self.quantizer = quantizer
        self.regressor = regressor

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "DuinVQVAE":
        encoder = DuinEncoder(cfg.encoder)
        quantizer = VectorQuantizer(cfg.encoder.d_model, cfg.quantizer)
        regressor = Regressor(
            d_model=cfg.encoder.d_model,
            n_channels=cfg.encoder.n_channels,
            window=cfg.encoder.window,
            t_max=cfg.encoder.t_max,
            cfg=cfg.regressor,
            init_std=cfg.encoder.init_std,
        )
        return cls(encoder, quantizer, regressor)

    def forward(self, x: torch.Tensor) -> VqvaeOutput:
        """
        Encode, quantize and reconstruct.

        The target is the input truncated to whole patches.
        """
        e = self.encoder(x)
        q = self.quantizer(e)
        recon = self.regressor(q.embeddings)
        target = x[..., : recon.shape[-1]]
        return VqvaeOutput(reconstruction=recon, target=target, quantized=q)

    @torch.no_grad()
    def code_indices(self, x: torch.Tensor) -> torch.Tensor:
        """Codex indices of every patch, computed without touching codex state."""
        e = self.encoder(x)
        z_c = self.quantizer.to_codex_space(e)
        indices, _ = quantize(z_c, self.quantizer.codex)
        return indices
