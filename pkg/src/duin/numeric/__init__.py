"""
Numeric Module

Differentiable operations over torch tensors, the AdamW optimizer with a
cosine warmup schedule, finite-difference gradient checking and
reproducibility helpers.
"""

from .determinism import configure_threads, numpy_generator, seed_everything, torch_generator
from .functional import (
    NonFiniteError,
    NumericError,
    ShapeError,
    activation,
    backward,
    batch_norm,
    check_finite,
    conv1d,
    conv1d_out_len,
    conv1d_transpose,
    conv1d_transpose_out_len,
    dropout,
    layer_norm,
    matmul,
    mse,
    softmax_cross_entropy,
)
from .gradcheck import GradcheckReport, finite_diff_gradcheck, relative_error
from .optim import (
    ADAM_BETAS,
    ADAM_EPS,
    CosineWarmupSchedule,
    adamw_step,
    build_optimizer,
    cosine_warmup_lr,
    set_lr,
)

__all__ = [
    "ADAM_BETAS",
    "ADAM_EPS",
    "CosineWarmupSchedule",
    "GradcheckReport",
    "NonFiniteError",
    "NumericError",
    "ShapeError",
    "activation",
    "adamw_step",
    "backward",
    "batch_norm",
    "build_optimizer",
    "check_finite",
    "configure_threads",
    "conv1d",
    "conv1d_out_len",
    "conv1d_transpose",
    "conv1d_transpose_out_len",
    "cosine_warmup_lr",
    "dropout",
    "finite_diff_gradcheck",
    "layer_norm",
    "matmul",
    "mse",
    "numpy_generator",
    "relative_error",
    "seed_everything",
    "set_lr",
    "softmax_cross_entropy",
    "torch_generator",
]
