"""Reversible per-instance, per-channel normalization.

Statistics (population mean and std, eps under the square root) are
computed from the lookback window only, so no future value can leak into
them; predictions are denormalized with the same statistics. The optional
affine pair (gain, bias) is learnable and serializes with the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, add, constant, div, mul, sub
from .exceptions import DegenerateWindowError, ZeroGainError

DEFAULT_EPS = 1e-5


@dataclass
class RevinState:
    """Per-(instance, channel) statistics captured by a forward pass."""

    mean: np.ndarray  # (B, N)
    std: np.ndarray   # (B, N); already includes eps under the sqrt
    eps: float
    gain: Tensor | None
    bias: Tensor | None


def compute_stats(values: np.ndarray, eps: float = DEFAULT_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Mean and (eps-stabilized, population) std over the time axis of (B, L, N)."""
    if values.shape[1] < 2:
        raise DegenerateWindowError(f"need at least 2 time steps, got {values.shape[1]}")
    mean = values.mean(axis=1)
    var = values.var(axis=1)
    return mean, np.sqrt(var + eps)


def revin_forward(
    x: Tensor | np.ndarray,
    gain: Tensor | None = None,
    bias: Tensor | None = None,
    eps: float = DEFAULT_EPS,
) -> tuple[Tensor, RevinState]:
    """Normalize (B, L, N) per instance and channel; returns output + state."""
    x_tensor = x if isinstance(x, Tensor) else constant(x)
    mean, std = compute_stats(x_tensor.data, eps)
    normalized = (x_tensor.data - mean[:, None, :]) / std[:, None, :]
    out = constant(normalized)
    if gain is not None:
        out = mul(out, gain)
    if bias is not None:
        out = add(out, bias)
    return out, RevinState(mean=mean, std=std, eps=eps, gain=gain, bias=bias)


def revin_inverse(y: Tensor | np.ndarray, state: RevinState) -> Tensor:
    """Exact algebraic inverse on (B, S, N): x = (y - bias)/gain * std + mean."""
    out = y if isinstance(y, Tensor) else constant(y)
    if state.bias is not None:
        out = sub(out, state.bias)
    if state.gain is not None:
        if np.min(np.abs(state.gain.data)) < 1e-12:
            raise ZeroGainError("affine gain too close to zero to invert")
        out = div(out, state.gain)
    out = mul(out, constant(state.std[:, None, :]))
    return add(out, constant(state.mean[:, None, :]))
