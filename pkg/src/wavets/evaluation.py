"""Metrics, parameter and MAC accounting, timing, and run reports.

Parameter counts come from a closed form that must match the live tally
of an instantiated model exactly. MAC accounting uses the usual reporting
convention for lightweight forecasters: one multiply-accumulate per
multiply, forward pass only, batch 32 for headline numbers. The headline
``macs`` figure covers the linear layers (the model's learnable compute);
the fixed wavelet transform is tracked separately as ``transform`` and
included in ``total``.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import WindowBatch
from .exceptions import InvalidConfigError, ShapeMismatchError
from .model import ModelConfig
from .wavelet import get_bank


def mse(pred: np.ndarray, true: np.ndarray) -> float:
    if pred.shape != true.shape:
        raise ShapeMismatchError(f"shapes differ: {pred.shape} vs {true.shape}")
    return float(np.mean((pred - true) ** 2))


def mae(pred: np.ndarray, true: np.ndarray) -> float:
    if pred.shape != true.shape:
        raise ShapeMismatchError(f"shapes differ: {pred.shape} vs {true.shape}")
    return float(np.mean(np.abs(pred - true)))


def per_horizon_errors(pred: np.ndarray, true: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Step-wise MSE/MAE over (B, S, N) predictions: two length-S vectors."""
    if pred.shape != true.shape:
        raise ShapeMismatchError(f"shapes differ: {pred.shape} vs {true.shape}")
    diff = pred - true
    return (diff**2).mean(axis=(0, 2)), np.abs(diff).mean(axis=(0, 2))


def persistence_baseline(batch: WindowBatch) -> np.ndarray:
    """Repeat each window's last lookback value across the horizon."""
    horizon = batch.y.shape[1]
    return np.repeat(batch.x[:, -1:, :], horizon, axis=1)


@dataclass(frozen=True)
class ParamCount:
    total: int
    breakdown: dict[str, int]


def count_params(cfg: ModelConfig) -> ParamCount:
    """Closed-form learnable parameter count with a per-block breakdown.

    Must (and is tested to) equal the enumerated size of init_params(cfg).
    """
    half, horizon, channels = cfg.half, cfg.horizon, cfg.channels
    breakdown: dict[str, int] = {}
    if cfg.variant in ("B", "S", "LF"):
        if cfg.lf_hidden:
            breakdown["lf_head"] = (
                half * cfg.lf_hidden + cfg.lf_hidden + cfg.lf_hidden * horizon + horizon
            )
        else:
            breakdown["lf_head"] = half * horizon + horizon
    if cfg.variant in ("B", "M", "HF"):
        breakdown["hf_head"] = half * horizon + horizon
    if cfg.variant == "I":
        breakdown["lf_head"] = half * (horizon // 2) + horizon // 2
        breakdown["hf_head"] = half * (horizon // 2) + horizon // 2
    if cfg.variant == "M":
        assert cfg.moe is not None
        experts, hidden = cfg.moe.num_experts, cfg.moe.hidden
        breakdown["moe_experts"] = experts * (half * hidden + hidden + hidden * horizon + horizon)
        breakdown["moe_gate"] = half * experts + experts
    if cfg.has_delta():
        breakdown["delta"] = channels if cfg.delta_per_channel else 1
    if cfg.revin_affine:
        breakdown["revin_affine"] = 2 * channels
    return ParamCount(total=sum(breakdown.values()), breakdown=breakdown)


@dataclass(frozen=True)
class MacCount:
    """Forward-pass multiply-accumulates per sample and per batch."""

    linear_per_sample: int
    transform_per_sample: int
    batch_size: int

    @property
    def total_per_sample(self) -> int:
        return self.linear_per_sample + self.transform_per_sample

    @property
    def linear_per_batch(self) -> int:
        return self.linear_per_sample * self.batch_size

    @property
    def total_per_batch(self) -> int:
        return self.total_per_sample * self.batch_size


def count_macs(cfg: ModelConfig, batch_size: int = 32) -> MacCount:
    """Closed-form MACs: Din*Dout per linear layer per (sample, channel);
    the analysis transform adds K*(L/2) per channel (plus K*(S/2) for the
    synthesis step of variant I)."""
    if batch_size < 1:
        raise InvalidConfigError(f"batch_size must be >= 1, got {batch_size}")
    half, horizon, channels = cfg.half, cfg.horizon, cfg.channels
    taps = get_bank(cfg.bank).length

    if cfg.lf_hidden:
        lf_linear = half * cfg.lf_hidden + cfg.lf_hidden * horizon
    else:
        lf_linear = half * horizon
    hf_linear = half * horizon

    if cfg.variant in ("S", "LF"):
        linear = lf_linear
    elif cfg.variant == "B":
        linear = lf_linear + hf_linear
    elif cfg.variant == "HF":
        linear = hf_linear
    elif cfg.variant == "I":
        linear = 2 * half * (horizon // 2)
    else:  # M
        assert cfg.moe is not None
        experts, hidden = cfg.moe.num_experts, cfg.moe.hidden
        linear = half * experts + experts * (half * hidden + hidden * horizon) + hf_linear

    transform = taps * half
    if cfg.variant == "I":
        transform += taps * (horizon // 2)
    return MacCount(
        linear_per_sample=linear * channels,
        transform_per_sample=transform * channels,
        batch_size=batch_size,
    )


def hardware_note() -> str:
    return (
        f"{platform.system()} {platform.machine()}, "
        f"python {platform.python_version()}, numpy {np.__version__}, "
        f"cpu: {platform.processor() or 'unknown'}"
    )


def time_mean(fn: Callable[[], object], repeats: int) -> float:
    """Mean wall-clock seconds of ``fn`` over ``repeats`` calls."""
    if repeats < 1:
        raise InvalidConfigError("repeats must be >= 1")
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


TIMING_FIELDS = ("epoch_time_s", "infer_time_ms")


@dataclass
class RunReport:
    """One train/eval run, serializable to a CSV row plus a JSON detail file.

    ``macs_per_sample``/``macs_per_batch`` are the headline (linear-layer)
    figures; the fixed-transform share is reported separately. Timing
    fields stay None when nothing was measured - they are wall-clock and
    are excluded from determinism comparisons.
    """

    dataset: str
    variant: str
    lookback: int
    horizon: int
    channels: int
    bank: str
    seed: int
    mse: float
    mae: float
    param_count: int
    macs_per_sample: int
    macs_per_batch: int
    transform_macs_per_sample: int
    epochs_trained: int = 0
    epoch_time_s: float | None = None
    infer_time_ms: float | None = None
    per_horizon_mse: list[float] = field(default_factory=list)
    per_horizon_mae: list[float] = field(default_factory=list)
    hardware: str = ""

    CSV_FIELDS = (
        "dataset",
        "variant",
        "lookback",
        "horizon",
        "channels",
        "bank",
        "seed",
        "mse",
        "mae",
        "param_count",
        "macs_per_sample",
        "macs_per_batch",
        "transform_macs_per_sample",
        "epochs_trained",
        "epoch_time_s",
        "infer_time_ms",
    )

    def csv_row(self) -> list[str]:
        out = []
        for name in self.CSV_FIELDS:
            value = getattr(self, name)
            if value is None:
                out.append("")
            elif isinstance(value, float):
                out.append(repr(value))
            else:
                out.append(str(value))
        return out

    def deterministic_fields(self) -> dict:
        """Everything except wall-clock measurements and the hardware note."""
        data = asdict(self)
        for name in TIMING_FIELDS:
            data.pop(name)
        data.pop("hardware")
        return data

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


def write_reports_csv(reports: Sequence[RunReport], path: str | Path) -> None:
    lines = [",".join(RunReport.CSV_FIELDS)]
    lines += [",".join(r.csv_row()) for r in reports]
    Path(path).write_text("\n".join(lines) + "\n")


def read_reports_csv(path: str | Path) -> list[dict[str, str]]:
    import csv as _csv

    with open(path, newline="") as fh:
        return list(_csv.DictReader(fh))
