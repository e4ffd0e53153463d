"""
Regressor Module

Decodes quantized patch embeddings back into raw signal: a transformer
decoder over the patch sequence, then a transposed-conv head that expands
every patch to W samples, then a per-sample linear map to the C channels.

Shape law: (B, N, d) -> (B, C, W * N).
"""

import logging
from functools import partial

import torch
from torch import nn

from ..config import RegressorConfig
from ..numeric import activation, conv1d_transpose
from .layers import ModelError, TemporalEmbedding, TransformerStack, init_weights

# Configure logging
logger = logging.getLogger(__name__)


class TimeRegressionHead(nn.Module):
    """Transposed-conv stack mapping (B, d, N) to (B, head_channels[-1], W * N)."""

    def __init__(self, d_model: int, cfg: RegressorConfig):
        super().__init__()
        self.cfg = cfg
        in_channels = [d_model, *cfg.head_channels[:-1]]
        self.layers = nn.ModuleList(
            nn.ConvTranspose1d(c_in, c_out, k, stride=s, padding=p, output_padding=op)
            for c_in, c_out, k, s, p, op in zip(
                in_channels,
                cfg.head_channels,
                cfg.head_kernels,
                cfg.head_strides,
                cfg.head_paddings,
                cfg.head_output_paddings,
                strict=True,
            )
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = conv1d_transpose(
                x,
                layer.weight,
                layer.bias,
                stride=layer.stride[0],
                padding=layer.padding[0],
                output_padding=layer.output_padding[0],
            )
            if i < last:
                x = activation(x, self.cfg.head_activation)
        return x


class Regressor(nn.Module):
    """Transformer decoder plus time regression head."""

    def __init__(
        self,
        d_model: int,
        n_channels: int,
        window: int,
        t_max: int,
        cfg: RegressorConfig,
        init_std: float = 0.02,
    ):
        super().__init__()
        self.cfg = cfg
        self.window = window
        self.n_channels = n_channels
        self.temporal = TemporalEmbedding(t_max, d_model) if cfg.add_temporal else None
        self.decoder = TransformerStack(
            n_layers=cfg.n_layers,
            d_model=d_model,
            n_heads=cfg.n_heads,
            head_dim=cfg.head_dim,
            ffn_dim=cfg.ffn_dim,
        )
        self.head = TimeRegressionHead(d_model, cfg)
        self.out = nn.Linear(cfg.head_channels[-1], n_channels)
        self.apply(partial(init_weights, std=init_std))

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """
        Reconstruct signal from (B, N, d) embeddings.

        Raises:
            ModelError: If the head does not produce exactly W * N samples.
        """
        n = z.shape[1]
        if self.temporal is not None:
            z = self.temporal(z)
        h = self.head(self.decoder(z).transpose(1, 2))
        if h.shape[-1] != self.window * n:
            raise ModelError(f"Regressor produced {h.shape[-1]} samples for {n} patches")
        return self.out(h.transpose(1, 2)).transpose(1, 2)
