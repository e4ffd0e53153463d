"""
Functional Module

The differentiable operation set used by every model in the package, as thin
validated functions over ``torch`` tensors. Gradients come from autograd;
the functions here add shape checks with readable errors, fixed conventions
(tanh-approximate GELU, population statistics) and non-finite detection.

Example:
    >>> import torch
    >>> from duin.numeric import conv1d, conv1d_out_len
    >>> x = torch.randn(2, 1, 100)
    >>> w = torch.randn(16, 1, 19)
    >>> conv1d(x, w, stride=10, padding=9).shape[-1] == conv1d_out_len(100, 19, 10, 9)
    True
"""

import logging
from typing import Literal

import torch
import torch.nn.functional as F

# Configure logging
logger = logging.getLogger(__name__)

ActivationKind = Literal["relu", "gelu", "tanh"]


class NumericError(Exception):
    """Base exception for numeric core errors."""

    pass


class ShapeError(NumericError):
    """Raised when operand shapes are incompatible."""

    pass


class NonFiniteError(NumericError):
    """Raised when a tensor holds NaN or Inf where finite values are required."""

    pass


def check_finite(x: torch.Tensor, name: str = "tensor") -> torch.Tensor:
    """Raise NonFiniteError if ``x`` holds NaN or Inf; return ``x`` otherwise."""
    if not bool(torch.isfinite(x).all()):
        raise NonFiniteError(f"{name} contains non-finite values")
    return x


def conv1d_out_len(length: int, kernel: int, stride: int = 1, padding: int = 0) -> int:
    """Output length floor((L + 2p - k) / s) + 1 of a 1D convolution."""
    return (length + 2 * padding - kernel) // stride + 1


def conv1d_transpose_out_len(
    length: int, kernel: int, stride: int = 1, padding: int = 0, output_padding: int = 0
) -> int:
    """Output length (L - 1) * s - 2p + k + op of a 1D transposed convolution."""
    return (length - 1) * stride - 2 * padding + kernel + output_padding


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """
    Matrix product over the last two axes (leading axes broadcast).

    Raises:
        ShapeError: If the inner dimensions disagree.
    """
    if a.dim() < 1 or b.dim() < 1 or a.shape[-1] != (b.shape[-2] if b.dim() > 1 else b.shape[0]):
        raise ShapeError(f"matmul inner dimensions disagree: {tuple(a.shape)} @ {tuple(b.shape)}")
    return torch.matmul(a, b)


def _batched(x: torch.Tensor) -> tuple[torch.Tensor, bool]:
    if x.dim() == 2:
        return x.unsqueeze(0), True
    if x.dim() == 3:
        return x, False
    raise ShapeError(f"Expected (C, L) or (B, C, L) input, got shape {tuple(x.shape)}")


def conv1d(
    x: torch.Tensor,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> torch.Tensor:
    """
    Zero-padded 1D convolution (cross-correlation).

    Args:
        x: Input of shape (C_in, L) or (B, C_in, L).
        weight: Kernel of shape (C_out, C_in, k).
        bias: Optional bias of shape (C_out,).
        stride: Stride s.
        padding: Zero padding p on each side.

    Returns:
        Output with length floor((L + 2p - k) / s) + 1.

    Raises:
        ShapeError: On channel mismatch or a kernel longer than the padded input.
    """
    xb, squeeze = _batched(x)
    c_out, c_in, k = weight.shape
    if xb.shape[1] != c_in:
        raise ShapeError(f"conv1d expects {c_in} input channels, got {xb.shape[1]}")
    if xb.shape[-1] + 2 * padding < k:
        raise ShapeError(
            f"conv1d kernel {k} is larger than padded input {xb.shape[-1]} + 2*{padding}"
        )
    out = F.conv1d(xb, weight, bias, stride=stride, padding=padding)
    return out.squeeze(0) if squeeze else out


def conv1d_transpose(
    x: torch.Tensor,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
    output_padding: int = 0,
) -> torch.Tensor:
    """
    1D transposed convolution, the adjoint of :func:`conv1d`.

    Args:
        x: Input of shape (C_in, L) or (B, C_in, L).
        weight: Kernel of shape (C_in, C_out, k).
        bias: Optional bias of shape (C_out,).
        stride: Stride s.
        padding: Padding p removed from each side.
        output_padding: Extra samples op added to one side; must be < s.

    Returns:
        Output with length (L - 1) * s - 2p + k + op.

    Raises:
        ShapeError: If op >= s, on channel mismatch, or for a non-positive output length.
    """
    if output_padding >= stride:
        raise ShapeError(f"output_padding {output_padding} must be smaller than stride {stride}")
    xb, squeeze = _batched(x)
    c_in, _, k = weight.shape
    if xb.shape[1] != c_in:
        raise ShapeError(f"conv1d_transpose expects {c_in} input channels, got {xb.shape[1]}")
    if conv1d_transpose_out_len(xb.shape[-1], k, stride, padding, output_padding) < 1:
        raise ShapeError("conv1d_transpose output length would be non-positive")
    out = F.conv_transpose1d(
        xb, weight, bias, stride=stride, padding=padding, output_padding=output_padding
    )
    return out.squeeze(0) if squeeze else out


def layer_norm(
    x: torch.Tensor,
    gain: torch.Tensor | None = None,
    bias: torch.Tensor | None = None,
    eps: float = 1e-5,
) -> torch.Tensor:
    """Normalize over the last axis: (x - mean) / sqrt(var + eps) * gain + bias."""
    return F.layer_norm(x, (x.shape[-1],), gain, bias, eps)


def batch_norm(
    x: torch.Tensor,
    running_mean: torch.Tensor,
    running_var: torch.Tensor,
    gain: torch.Tensor | None = None,
    bias: torch.Tensor | None = None,
    training: bool = True,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> torch.Tensor:
    """
    Per-channel batch normalization over (B, C, L) or (B, C) input.

    In training mode the batch statistics normalize the input and the
    running statistics move toward them by ``momentum``; momentum 0 freezes
    them. In inference mode the running statistics are used.

    Raises:
        ShapeError: If training on a single value per channel.
    """
    if training:
        per_channel = x.shape[0] * (x.shape[2] if x.dim() == 3 else 1)
        if per_channel < 2:
            raise ShapeError("batch_norm in training mode needs more than one value per channel")
    return F.batch_norm(
        x, running_mean, running_var, gain, bias, training=training, momentum=momentum, eps=eps
    )


def activation(x: torch.Tensor, kind: str) -> torch.Tensor:
    """
    Elementwise activation.

    Args:
        x: Input tensor.
        kind: One of "relu", "gelu" (tanh approximation) or "tanh".

    Raises:
        NumericError: For an unknown kind.
    """
    if kind == "relu":
        return F.relu(x)
    if kind == "gelu":
        return F.gelu(x, approximate="tanh")
    if kind == "tanh":
        return torch.tanh(x)
    raise NumericError(f"Unknown activation kind: {kind!r}")


def dropout(
    x: torch.Tensor,
    rate: float,
    training: bool = True,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """
    Inverted dropout: zero each element with probability ``rate`` and scale
    survivors by 1 / (1 - rate). Identity when not training or rate is 0.

    Raises:
        NumericError: If rate is outside [0, 1).
    """
    if not 0.0 <= rate < 1.0:
        raise NumericError(f"Dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype, device=x.device) >= rate
    return x * keep.to(x.dtype) / (1.0 - rate)


def softmax_cross_entropy(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Mean over the batch of -log softmax(logits)[target].

    Args:
        logits: Shape (B, K).
        targets: Integer class indices of shape (B,).

    Raises:
        ShapeError: On batch mismatch.
        NumericError: If a target is outside [0, K).
    """
    if logits.dim() != 2 or targets.dim() != 1 or logits.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"cross-entropy expects (B, K) logits and (B,) targets, got "
            f"{tuple(logits.shape)} and {tuple(targets.shape)}"
        )
    n_classes = logits.shape[1]
    if targets.numel() and (int(targets.min()) < 0 or int(targets.max()) >= n_classes):
        raise NumericError(f"Targets must lie in [0, {n_classes})")
    return F.cross_entropy(logits, targets.long())


def mse(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """
    Mean of squared differences.

    Raises:
        ShapeError: If the shapes differ.
    """
    if x.shape != y.shape:
        raise ShapeError(f"mse shapes differ: {tuple(x.shape)} vs {tuple(y.shape)}")
    return F.mse_loss(x, y)


def backward(loss: torch.Tensor) -> None:
    """
    Propagate gradients from a scalar loss into every reachable parameter.

    Raises:
        ShapeError: If the loss is not a scalar.
        NonFiniteError: If the loss is NaN or Inf.
    """
    if loss.numel() != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
    check_finite(loss.detach(), "loss")
    loss.backward()
