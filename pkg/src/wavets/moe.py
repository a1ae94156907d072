"""Soft channel-clustering mixture of experts for the low-frequency band.

A softmax gate maps each channel's coefficients to a probability vector
over experts; every expert is a two-layer ReLU MLP and the mixture is the
dense gate-weighted sum of all expert outputs (no top-k sparsification).
Expert evaluation order is fixed, so results are reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor, add, linear, mul, relu, slice_lastdim, softmax_lastdim
from .exceptions import InvalidConfigError, ShapeMismatchError


@dataclass(frozen=True)
class MoEConfig:
    num_experts: int = 4
    hidden: int = 64

    def __post_init__(self) -> None:
        if self.num_experts < 1:
            raise InvalidConfigError(f"num_experts must be >= 1, got {self.num_experts}")
        if self.hidden < 1:
            raise InvalidConfigError(f"hidden must be >= 1, got {self.hidden}")


def param_shapes(cfg: MoEConfig, in_dim: int, out_dim: int) -> dict[str, tuple[int, ...]]:
    """Gate plus per-expert parameter shapes, keyed by name."""
    shapes: dict[str, tuple[int, ...]] = {
        "gate.weight": (in_dim, cfg.num_experts),
        "gate.bias": (cfg.num_experts,),
    }
    for e in range(cfg.num_experts):
        shapes[f"expert{e}.w1"] = (in_dim, cfg.hidden)
        shapes[f"expert{e}.b1"] = (cfg.hidden,)
        shapes[f"expert{e}.w2"] = (cfg.hidden, out_dim)
        shapes[f"expert{e}.b2"] = (out_dim,)
    return shapes


def _key(prefix: str, name: str) -> str:
    return prefix + name if prefix else name


def gate(params: dict[str, Tensor], x: Tensor, prefix: str = "") -> Tensor:
    """Per-channel expert probabilities: softmax(x @ Wg + bg) over the last axis."""
    weight = params[_key(prefix, "gate.weight")]
    if x.shape[-1] != weight.shape[0]:
        raise ShapeMismatchError(
            f"gate expects last dim {weight.shape[0]}, got {x.shape[-1]}"
        )
    return softmax_lastdim(linear(x, weight, params[_key(prefix, "gate.bias")]))


def expert_forward(params: dict[str, Tensor], index: int, x: Tensor, prefix: str = "") -> Tensor:
    """One expert: w2 @ relu(w1 @ x + b1) + b2."""
    hidden = relu(
        linear(x, params[_key(prefix, f"expert{index}.w1")], params[_key(prefix, f"expert{index}.b1")])
    )
    return linear(hidden, params[_key(prefix, f"expert{index}.w2")], params[_key(prefix, f"expert{index}.b2")])


def moe_forward(params: dict[str, Tensor], cfg: MoEConfig, x: Tensor, prefix: str = "") -> Tensor:
    """Dense mixture: sum_e gate[..., e] * expert_e(x), summed in index order."""
    weights = gate(params, x, prefix)
    out: Tensor | None = None
    for e in range(cfg.num_experts):
        term = mul(slice_lastdim(weights, e), expert_forward(params, e, x, prefix))
        out = term if out is None else add(out, term)
    assert out is not None
    return out


def gate_entropy(probabilities: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of probability rows over the last axis."""
    p = np.clip(probabilities, 1e-300, None)
    return -(probabilities * np.log(p)).sum(axis=-1)


def gate_report(
    params: dict[str, Tensor],
    cfg: MoEConfig,
    band: np.ndarray,
    channel_names: list[str] | None = None,
    prefix: str = "",
) -> list[dict]:
    """Per-channel gate diagnostics over a (B, N, L/2) batch.

    Each row holds the batch-mean gate vector, its argmax expert, and its
    entropy; mean vectors still sum to one because softmax rows do.
    """
    probs = gate(params, Tensor(band), prefix).data  # (B, N, E)
    mean_probs = probs.mean(axis=0)  # (N, E)
    rows = []
    for n in range(mean_probs.shape[0]):
        row = {
            "channel": channel_names[n] if channel_names else str(n),
            "argmax": int(np.argmax(mean_probs[n])),
            "entropy": float(gate_entropy(mean_probs[n])),
        }
        for e in range(cfg.num_experts):
            row[f"expert_{e}"] = float(mean_probs[n, e])
        rows.append(row)
    return rows


def write_gate_report_csv(rows: list[dict], path: str | Path, num_experts: int) -> None:
    header = ["channel"] + [f"expert_{e}" for e in range(num_experts)] + ["argmax", "entropy"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in header})


def max_entropy(num_experts: int) -> float:
    return math.log(num_experts)
