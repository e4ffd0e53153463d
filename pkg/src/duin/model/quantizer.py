"""
Quantizer Module

Vector quantization of encoder embeddings against a neural codex.

Embeddings are mapped into the codex space, matched to the codex row with
the highest cosine similarity and mapped back with a straight-through
estimator. The codex itself is not trained by gradient: rows are
exponential moving averages of the vectors assigned to them, and rows left
unused for too long are reseeded from recent inputs.

Example:
    >>> from duin.config import QuantizerConfig
    >>> vq = VectorQuantizer(160, QuantizerConfig(n_codex=512, d_codex=32))
    >>> result = vq(torch.randn(4, 40, 160))
    >>> result.indices.shape
    torch.Size([4, 40])
"""

import logging
import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..config import QuantizerConfig
from ..numeric import activation, mse

# Configure logging
logger = logging.getLogger(__name__)

COLLAPSE_UTILIZATION = 0.05
NORM_EPS = 1e-12


@dataclass
class QuantizeResult:
    """
    Output of one quantizer pass.

    Attributes:
        indices: Selected codex rows, shape (B, N).
        z_c: Embeddings in codex space, shape (B, N, d_codex).
        z_q: Selected codex rows (unnormalized), shape (B, N, d_codex).
        embeddings: Straight-through embeddings mapped back to model width.
        codebook_loss: mean ||sg[z_c] - z_q||^2, reported only.
        commit_loss: beta * mean ||z_c - sg[z_q]||^2.
    """

    indices: torch.Tensor
    z_c: torch.Tensor
    z_q: torch.Tensor
    embeddings: torch.Tensor
    codebook_loss: torch.Tensor
    commit_loss: torch.Tensor


def quantize(z_c: torch.Tensor, codex: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Nearest codex row under l2-normalized distance.

    Minimizing ||l2(z) - l2(c)|| is maximizing cosine similarity; ties go to
    the lowest index. Zero queries normalize to zero and select row 0.

    Args:
        z_c: Queries of shape (..., d_codex).
        codex: Codex of shape (n_codex, d_codex).

    Returns:
        Tuple of (indices of shape (...), selected rows of shape (..., d_codex)).
    """
    if codex.shape[0] == 0:
        raise ValueError("Codex is empty")
    queries = F.normalize(z_c.detach(), dim=-1, eps=NORM_EPS)
    rows = F.normalize(codex, dim=-1, eps=NORM_EPS)
    similarity = queries @ rows.T
    indices = torch.argmax(similarity, dim=-1)
    return indices, codex[indices]


def vq_loss_terms(
    z_c: torch.Tensor, z_q: torch.Tensor, beta: float
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Codebook and commitment terms.

    Returns:
        (mse(sg[z_c], z_q), beta * mse(z_c, sg[z_q])).
    """
    codebook = mse(z_c.detach(), z_q)
    commit = beta * mse(z_c, z_q.detach())
    return codebook, commit


def codex_utilization(counts: torch.Tensor) -> float:
    """Fraction of codex rows used at least once."""
    return float((counts > 0).float().mean())


def codex_perplexity(counts: torch.Tensor) -> float:
    """exp of the entropy of the empirical code distribution."""
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts.double() / total
    p = p[p > 0]
    return float(torch.exp(-(p * p.log()).sum()))


class CodexProjection(nn.Module):
    """Two-layer map d -> d (tanh) -> d_codex."""

    def __init__(self, d_model: int, d_codex: int):
        super().__init__()
        self.hidden = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_codex)

    def forward(self, e: torch.Tensor) -> torch.Tensor:
        return self.out(activation(self.hidden(e), "tanh"))


class VectorQuantizer(nn.Module):
    """
    Cosine-similarity vector quantizer with an EMA-maintained codex.

    Buffers:
        codex: (n_codex, d_codex) codex rows.
        ema_cluster_size: Running assignment counts per row.
        ema_embed_sum: Running sums of assigned vectors per row.
        usage_counts: Assignments since the last ``reset_usage``.
        idle_steps: Training steps since each row was last assigned.
    """

    def __init__(self, d_model: int, cfg: QuantizerConfig):
        super().__init__()
        self.cfg = cfg
        self.beta = cfg.beta
        self.decay = cfg.decay
        self.eps = cfg.eps
        self.frozen = False
        self.dead_code_threshold = 0

        self.proj_in = CodexProjection(d_model, cfg.d_codex)
        self.proj_out = nn.Linear(cfg.d_codex, d_model)

        codex = torch.randn(cfg.n_codex, cfg.d_codex) / math.sqrt(cfg.d_codex)
        self.register_buffer("codex", codex)
        self.register_buffer("ema_cluster_size", torch.zeros(cfg.n_codex))
        self.register_buffer("ema_embed_sum", torch.zeros_like(codex))
        self.register_buffer("usage_counts", torch.zeros(cfg.n_codex, dtype=torch.long))
        self.register_buffer("idle_steps", torch.zeros(cfg.n_codex, dtype=torch.long))

    @property
    def n_codex(self) -> int:
        return int(self.codex.shape[0])

    def to_codex_space(self, e: torch.Tensor) -> torch.Tensor:
        return self.proj_in(e)

    def straight_through(self, z_c: torch.Tensor, z_q: torch.Tensor) -> torch.Tensor:
        """Forward value proj_out(z_q); gradient reaches z_c as if quantization were identity."""
        return self.proj_out(z_c + (z_q - z_c).detach())

    @torch.no_grad()
    def ema_update(self, z_c: torch.Tensor, indices: torch.Tensor) -> None:
        """
        Move codex rows toward the mean of their assigned vectors.

        Cluster sizes are Laplace-smoothed with ``eps``. Both accumulators start
        at zero, so a row fed the same vectors for k steps equals their
        centroid up to that smoothing.
        Rows never assigned since construction keep their initial value.
        """
        flat = z_c.reshape(-1, z_c.shape[-1]).to(self.codex.dtype)
        idx = indices.reshape(-1)
        counts = torch.bincount(idx, minlength=self.n_codex).to(self.codex.dtype)
        sums = torch.zeros_like(self.ema_embed_sum).index_add_(0, idx, flat)

        self.ema_cluster_size.mul_(self.decay).add_(counts, alpha=1.0 - self.decay)
        self.ema_embed_sum.mul_(self.decay).add_(sums, alpha=1.0 - self.decay)

        total = self.ema_cluster_size.sum()
        smoothed = (self.ema_cluster_size + self.eps) / (total + self.n_codex * self.eps) * total
        seen = self.ema_cluster_size > 0
        self.codex[seen] = self.ema_embed_sum[seen] / smoothed[seen].unsqueeze(1)

    @torch.no_grad()
    def record_usage(self, indices: torch.Tensor) -> None:
        counts = torch.bincount(indices.reshape(-1), minlength=self.n_codex)
        self.usage_counts += counts
        self.idle_steps += 1
        self.idle_steps[counts > 0] = 0

    @torch.no_grad()
    def dead_code_reseed(
        self,
        pool: torch.Tensor,
        threshold_steps: int,
        generator: torch.Generator | None = None,
    ) -> int:
        """
        Overwrite rows idle for ``threshold_steps`` with random vectors from ``pool``.

        Args:
            pool: Recent codex-space vectors, shape (..., d_codex).
            threshold_steps: Idle steps after which a row is dead; 0 disables.
            generator: Random generator for the pool draw.

        Returns:
            Number of rows reseeded.
        """
        if threshold_steps <= 0:
            return 0
        dead = torch.nonzero(self.idle_steps >= threshold_steps).flatten()
        if dead.numel() == 0:
            return 0
        flat = pool.detach().reshape(-1, pool.shape[-1]).to(self.codex.dtype)
        picks = torch.randint(0, flat.shape[0], (dead.numel(),), generator=generator)
        vectors = flat[picks]
        self.codex[dead] = vectors
        self.ema_embed_sum[dead] = vectors
        self.ema_cluster_size[dead] = 1.0
        self.idle_steps[dead] = 0
        logger.debug(f"Reseeded {dead.numel()} dead codex rows")
        return int(dead.numel())

    def utilization(self) -> float:
        return codex_utilization(self.usage_counts)

    def perplexity(self) -> float:
        return codex_perplexity(self.usage_counts)

    def reset_usage(self) -> None:
        self.usage_counts.zero_()

    def check_collapse(self) -> float:
        """Log utilization and warn when it falls below 5% of the codex."""
        used = self.utilization()
        if used < COLLAPSE_UTILIZATION:
            logger.warning(
                f"Codex collapse: only {used:.1%} of {self.n_codex} codes used this epoch"
            )
        return used

    @torch.no_grad()
    def update_codex(
        self, result: QuantizeResult, generator: torch.Generator | None = None
    ) -> int:
        """
        Apply the codex side of a training step for the batch behind ``result``.

        Records usage and the EMA move of assigned rows, then reseeds dead
        rows from the batch's codex-space vectors. Runs after the optimizer
        step. A frozen quantizer or one in eval mode is left untouched.

        Args:
            result: Output of the forward pass of the same batch.
            generator: Random generator for reseeding draws.

        Returns:
            Number of rows reseeded.
        """
        if self.frozen or not self.training:
            return 0
        z_c = result.z_c.detach()
        self.record_usage(result.indices)
        self.ema_update(z_c, result.indices)
        return self.dead_code_reseed(z_c, self.dead_code_threshold, generator)

    def forward(self, e: torch.Tensor) -> QuantizeResult:
        """Quantize ``e``; codex state is only changed by ``update_codex``."""
        z_c = self.to_codex_space(e)
        indices, z_q = quantize(z_c, self.codex)
        z_q = z_q.to(z_c.dtype)
        codebook, commit = vq_loss_terms(z_c, z_q, self.beta)
        embeddings = self.straight_through(z_c, z_q)

        return QuantizeResult(
            indices=indices,
            z_c=z_c,
            z_q=z_q,
            embeddings=embeddings,
            codebook_loss=codebook,
            commit_loss=commit,
        )
