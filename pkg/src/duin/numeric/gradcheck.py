"""
Gradient Check Module

Central finite-difference verification of autograd gradients.

Example:
    >>> report = finite_diff_gradcheck(lambda: (w @ x).sum(), {"w": w})
    >>> report.passed
    True
"""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import torch

# Configure logging
logger = logging.getLogger(__name__)

MAX_COORDINATES = 512
ERROR_FLOOR = 1e-3


@dataclass
class GradcheckReport:
    """
    Result of a finite-difference sweep.

    Attributes:
        max_rel_error: Largest relative error over all checked coordinates.
        per_parameter: Largest relative error per parameter name.
        n_checked: Coordinates checked per parameter name.
        tolerance: Pass threshold on the relative error.
        step: Finite-difference step h.
    """

    max_rel_error: float
    per_parameter: dict[str, float] = field(default_factory=dict)
    n_checked: dict[str, int] = field(default_factory=dict)
    tolerance: float = 1e-4
    step: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "step": self.step,
            "per_parameter": dict(self.per_parameter),
            "n_checked": dict(self.n_checked),
        }


def relative_error(analytic: float, numeric: float, floor: float = ERROR_FLOOR) -> float:
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _analytic_grads(
    fn: Callable[[], torch.Tensor], params: Mapping[str, torch.Tensor]
) -> dict[str, torch.Tensor]:
    for p in params.values():
        p.grad = None
    loss = fn()
    if loss.numel() != 1:
        raise ValueError(f"gradcheck needs a scalar function, got shape {tuple(loss.shape)}")
    loss.backward()
    return {
        name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for name, p in params.items()
    }


def finite_diff_gradcheck(
    fn: Callable[[], torch.Tensor],
    params: Mapping[str, torch.Tensor],
    h: float = 1e-4,
    tolerance: float = 1e-4,
    max_coordinates: int = MAX_COORDINATES,
    seed: int = 0,
    analytic_grads: Mapping[str, torch.Tensor] | None = None,
) -> GradcheckReport:
    """
    Compare gradients against central differences (f(x+h) - f(x-h)) / 2h.

    ``fn`` must be a deterministic scalar function of the tensors in
    ``params`` (evaluate models with dropout disabled). Parameters larger
    than ``max_coordinates`` are checked on a seeded random subset.

    Args:
        fn: Zero-argument closure returning a scalar tensor.
        params: Named leaf tensors with requires_grad set, ideally float64.
        h: Finite-difference step.
        tolerance: Pass threshold on the relative error.
        max_coordinates: Coordinates sampled per parameter.
        seed: Seed of the coordinate sampler.
        analytic_grads: Gradients to verify; computed with autograd when omitted.

    Returns:
        GradcheckReport with per-parameter maxima.
    """
    grads = dict(analytic_grads) if analytic_grads is not None else _analytic_grads(fn, params)
    rng = np.random.default_rng(seed)
    per_parameter: dict[str, float] = {}
    n_checked: dict[str, int] = {}

    with torch.no_grad():
        for name, p in params.items():
            flat = p.data.view(-1)
            grad = grads[name].reshape(-1)
            n = flat.numel()
            coords = (
                np.arange(n)
                if n <= max_coordinates
                else np.sort(rng.choice(n, size=max_coordinates, replace=False))
            )
            worst = 0.0
            for i in coords.tolist():
                original = flat[i].item()
                flat[i] = original + h
                f_plus = fn().item()
                flat[i] = original - h
                f_minus = fn().item()
                flat[i] = original
                numeric = (f_plus - f_minus) / (2.0 * h)
                worst = max(worst, relative_error(grad[i].item(), numeric))
            per_parameter[name] = worst
            n_checked[name] = len(coords)
            logger.debug(f"gradcheck {name}: {len(coords)} coords, max rel err {worst:.3e}")

    report = GradcheckReport(
        max_rel_error=max(per_parameter.values(), default=0.0),
        per_parameter=per_parameter,
        n_checked=n_checked,
        tolerance=tolerance,
        step=h,
    )
    if not report.passed:
        worst_name = max(per_parameter, key=per_parameter.__getitem__)
        logger.warning(
            f"Gradient check failed: max rel err {report.max_rel_error:.3e} at {worst_name!r}"
        )
    return report
