"""
Model Module

Encoder, quantizer, regressor and the three models assembled from them:
the reconstruction VQ-VAE, the masked-modeling MAE and the classifier.
"""

from .classifier import DuinClassifier, LabelHead
from .encoder import DuinEncoder, SpatialEncoder, patchify
from .layers import (
    ModelError,
    PatchError,
    QKNormAttention,
    TemporalEmbedding,
    TransformerBlock,
    TransformerStack,
    sinusoidal_table,
)
from .mae import (
    DuinMAE,
    MaskedLoss,
    apply_mask,
    mask_count,
    masked_loss,
    sample_batch_mask,
    sample_mask,
)
from .quantizer import (
    QuantizeResult,
    VectorQuantizer,
    codex_perplexity,
    codex_utilization,
    quantize,
    vq_loss_terms,
)
from .regressor import Regressor, TimeRegressionHead
from .vqvae import DuinVQVAE, VqvaeOutput

__all__ = [
    "DuinClassifier",
    "DuinEncoder",
    "DuinMAE",
    "DuinVQVAE",
    "LabelHead",
    "MaskedLoss",
    "ModelError",
    "PatchError",
    "QKNormAttention",
    "QuantizeResult",
    "Regressor",
    "SpatialEncoder",
    "TemporalEmbedding",
    "TimeRegressionHead",
    "TransformerBlock",
    "TransformerStack",
    "VectorQuantizer",
    "VqvaeOutput",
    "apply_mask",
    "codex_perplexity",
    "codex_utilization",
    "mask_count",
    "masked_loss",
    "patchify",
    "quantize",
    "sample_batch_mask",
    "sample_mask",
    "sinusoidal_table",
    "vq_loss_terms",
]
