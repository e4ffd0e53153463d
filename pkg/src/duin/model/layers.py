"""
Layers Module

Building blocks shared by the encoder and the regressor: seeded dropout,
the sinusoidal temporal table and a pre-norm transformer whose attention
layer-normalizes queries and keys before the dot product.
"""

import logging
import math

import torch
from torch import nn

from ..numeric import activation, dropout, layer_norm, matmul

# Configure logging
logger = logging.getLogger(__name__)


class ModelError(Exception):
    """Base exception for model construction and forward errors."""

    pass


class PatchError(ModelError):
    """Raised when a sample cannot be patched for the configured model."""

    pass


class Dropout(nn.Module):
    """Inverted dropout active only in training mode."""

    def __init__(self, rate: float):
        super().__init__()
        self.rate = rate

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return dropout(x, self.rate, training=self.training)


def sinusoidal_table(t_max: int, d_model: int) -> torch.Tensor:
    """
    Fixed position table of shape (t_max, d_model).

    Row i holds sin(i / 10000^(2j/d)) at column 2j and cos of the same angle
    at column 2j + 1.
    """
    position = torch.arange(t_max, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model)
    )
    table = torch.zeros(t_max, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)[:, : d_model // 2]
    return table.float()


class TemporalEmbedding(nn.Module):
    """Adds parameter-free sinusoidal rows 0..N-1 to a (B, N, d) sequence."""

    def __init__(self, t_max: int, d_model: int):
        super().__init__()
        self.t_max = t_max
        self.register_buffer("table", sinusoidal_table(t_max, d_model), persistent=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n = x.shape[-2]
        if n > self.t_max:
            raise PatchError(f"{n} patches exceed the temporal table size t_max={self.t_max}")
        return x + self.table[:n].to(x.dtype)


class QKNormAttention(nn.Module):
    """
    Multi-head self-attention with layer-normalized queries and keys.

    The Q and K norms act over the head dimension and share their gains and
    biases across heads.
    """

    def __init__(self, d_model: int, n_heads: int, head_dim: int, attn_dropout: float):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = head_dim
        width = n_heads * head_dim
        self.q = nn.Linear(d_model, width)
        self.k = nn.Linear(d_model, width)
        self.v = nn.Linear(d_model, width)
        self.q_norm = nn.LayerNorm(head_dim)
        self.k_norm = nn.LayerNorm(head_dim)
        self.proj = nn.Linear(width, d_model)
        self.attn_drop = Dropout(attn_dropout)
        self.last_weights: torch.Tensor | None = None

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        b, n, _ = x.shape
        return x.view(b, n, self.n_heads, self.head_dim).transpose(1, 2)

    def forward(self, x: torch.Tensor, keep_weights: bool = False) -> torch.Tensor:
        b, n, _ = x.shape
        q = layer_norm(self._heads(self.q(x)), self.q_norm.weight, self.q_norm.bias, self.q_norm.eps)
        k = layer_norm(self._heads(self.k(x)), self.k_norm.weight, self.k_norm.bias, self.k_norm.eps)
        v = self._heads(self.v(x))

        scores = matmul(q, k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        weights = torch.softmax(scores, dim=-1)
        if keep_weights:
            self.last_weights = weights.detach()
        out = matmul(self.attn_drop(weights), v)
        out = out.transpose(1, 2).reshape(b, n, self.n_heads * self.head_dim)
        return self.proj(out)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, ffn_dim: int, dropouts: tuple[float, float]):
        super().__init__()
        self.fc1 = nn.Linear(d_model, ffn_dim)
        self.fc2 = nn.Linear(ffn_dim, d_model)
        self.drop1 = Dropout(dropouts[0])
        self.drop2 = Dropout(dropouts[1])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.drop2(self.fc2(self.drop1(activation(self.fc1(x), "gelu"))))


class TransformerBlock(nn.Module):
    """Pre-norm block: x + attn(LN(x)), then x + ffn(LN(x))."""

    def __init__(
        self,
        d_model: int,
        n_heads: int,
        head_dim: int,
        ffn_dim: int,
        attn_dropout: float = 0.0,
        mlp_dropout: tuple[float, float] = (0.0, 0.0),
    ):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = QKNormAttention(d_model, n_heads, head_dim, attn_dropout)
        self.norm2 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, ffn_dim, mlp_dropout)

    def forward(self, x: torch.Tensor, keep_weights: bool = False) -> torch.Tensor:
        h = layer_norm(x, self.norm1.weight, self.norm1.bias, self.norm1.eps)
        x = x + self.attn(h, keep_weights=keep_weights)
        h = layer_norm(x, self.norm2.weight, self.norm2.bias, self.norm2.eps)
        return x + self.ffn(h)


class TransformerStack(nn.Module):
    """Stacked transformer blocks followed by a final layer norm."""

    def __init__(
        self,
        n_layers: int,
        d_model: int,
        n_heads: int,
        head_dim: int,
        ffn_dim: int,
        attn_dropout: float = 0.0,
        mlp_dropout: tuple[float, float] = (0.0, 0.0),
    ):
        super().__init__()
        self.blocks = nn.ModuleList(
            TransformerBlock(d_model, n_heads, head_dim, ffn_dim, attn_dropout, mlp_dropout)
            for _ in range(n_layers)
        )
        self.norm = nn.LayerNorm(d_model)

    def forward(self, x: torch.Tensor, keep_weights: bool = False) -> torch.Tensor:
        for block in self.blocks:
            x = block(x, keep_weights=keep_weights)
        return layer_norm(x, self.norm.weight, self.norm.bias, self.norm.eps)


def init_weights(module: nn.Module, std: float = 0.02) -> None:
    """Truncated-normal weights and zero biases for linear and conv layers."""
    if isinstance(module, nn.Linear | nn.Conv1d | nn.ConvTranspose1d):
        nn.init.trunc_normal_(module.weight, std=std, a=-2 * std, b=2 * std)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.LayerNorm | nn.BatchNorm1d):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)
