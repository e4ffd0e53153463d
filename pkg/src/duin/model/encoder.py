"""
Encoder Module

The patch encoder shared by every stage: non-overlapping W-sample patches,
a spatial encoder fusing all channels of a patch into one d-dimensional
token, parameter-free temporal embeddings and a transformer over the
patch sequence.

Shape law: (B, C, T) -> (B, floor(T / W), d).

Example:
    >>> from duin.config import EncoderConfig
    >>> encoder = DuinEncoder(EncoderConfig())
    >>> encoder(torch.randn(2, 10, 3000)).shape
    torch.Size([2, 30, 160])
"""

import logging
from functools import partial

import torch
from torch import nn

from ..config import EncoderConfig
from ..numeric import activation, batch_norm, conv1d
from .layers import PatchError, TemporalEmbedding, TransformerStack, init_weights

# Configure logging
logger = logging.getLogger(__name__)


def patchify(x: torch.Tensor, window: int) -> torch.Tensor:
    """
    Cut samples into non-overlapping patches, dropping the trailing remainder.

    Args:
        x: Samples of shape (B, C, T) or a single (C, T) sample.
        window: Patch length W.

    Returns:
        Patches of shape (B, N, C, W) with N = floor(T / W).

    Raises:
        PatchError: If T < W.
    """
    if x.dim() == 2:
        x = x.unsqueeze(0)
    if x.dim() != 3:
        raise PatchError(f"Expected (B, C, T) samples, got shape {tuple(x.shape)}")
    b, c, t = x.shape
    n = t // window
    if n < 1:
        raise PatchError(f"Sample length {t} is shorter than the patch window {window}")
    return x[:, :, : n * window].reshape(b, c, n, window).permute(0, 2, 1, 3)


class SpatialEncoder(nn.Module):
    """
    Per-patch channel fusion.

    A linear projection maps the C channels to ``proj_channels`` at every
    time step; a stack of conv -> batch norm -> activation layers then
    shortens the patch and the result is flattened to ``d_model``.
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.projection = nn.Linear(cfg.n_channels, cfg.proj_channels)
        in_channels = [cfg.proj_channels, *cfg.conv_channels[:-1]]
        self.convs = nn.ModuleList(
            nn.Conv1d(c_in, c_out, k, stride=s, padding=p)
            for c_in, c_out, k, s, p in zip(
                in_channels,
                cfg.conv_channels,
                cfg.conv_kernels,
                cfg.conv_strides,
                cfg.conv_paddings,
                strict=True,
            )
        )
        self.norms = nn.ModuleList(nn.BatchNorm1d(c) for c in cfg.conv_channels)

    def forward(self, patches: torch.Tensor) -> torch.Tensor:
        b, n, c, w = patches.shape
        if c != self.cfg.n_channels:
            raise PatchError(f"Encoder expects {self.cfg.n_channels} channels, got {c}")
        x = self.projection(patches.reshape(b * n, c, w).transpose(1, 2)).transpose(1, 2)
        for conv, norm in zip(self.convs, self.norms, strict=True):
            x = conv1d(x, conv.weight, conv.bias, stride=conv.stride[0], padding=conv.padding[0])
            x = batch_norm(
                x,
                norm.running_mean,
                norm.running_var,
                norm.weight,
                norm.bias,
                training=self.training,
                momentum=norm.momentum,
                eps=norm.eps,
            )
            x = activation(x, self.cfg.conv_activation)
        return x.reshape(b, n, -1)


class DuinEncoder(nn.Module):
    """
    Spatial encoder, temporal embedding and transformer.

    The three steps are exposed separately so that masked modeling can
    substitute patch embeddings before the temporal embedding is added.
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.spatial = SpatialEncoder(cfg)
        self.temporal = TemporalEmbedding(cfg.t_max, cfg.d_model)
        self.transformer = TransformerStack(
            n_layers=cfg.n_layers,
            d_model=cfg.d_model,
            n_heads=cfg.n_heads,
            head_dim=cfg.head_dim,
            ffn_dim=cfg.ffn_dim,
            attn_dropout=cfg.attn_dropout,
            mlp_dropout=cfg.mlp_dropout,
        )
        self.apply(partial(init_weights, std=cfg.init_std))

    @property
    def d_model(self) -> int:
        return self.cfg.d_model

    def n_patches(self, n_samples: int) -> int:
        return n_samples // self.cfg.window

    def spatial_encode(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, T) samples -> (B, N, d) patch embeddings."""
        return self.spatial(patchify(x, self.cfg.window))

    def add_temporal(self, e: torch.Tensor) -> torch.Tensor:
        return self.temporal(e)

    def transform(self, e: torch.Tensor, keep_weights: bool = False) -> torch.Tensor:
        return self.transformer(e, keep_weights=keep_weights)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.transform(self.add_temporal(self.spatial_encode(x)))
