"""Training loop: Adam with early stopping on validation MSE.

Single-threaded and fully seeded (init and batch shuffling draw from
separate child streams of the run seed), so identical settings yield
bit-identical parameters and metrics.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, constant, mse_loss
from .data import Series, WindowSampler
from .model import ModelConfig, forward, init_params
from .optim import Adam


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    seconds: float


@dataclass
class TrainResult:
    params: dict[str, Tensor]
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs_trained(self) -> int:
        return len(self.history)

    @property
    def mean_epoch_seconds(self) -> float | None:
        if not self.history:
            return None
        return float(np.mean([h.seconds for h in self.history]))


def evaluate_mse(
    cfg: ModelConfig,
    params: dict[str, Tensor],
    sampler: WindowSampler,
    batch_size: int,
) -> float:
    """Window-weighted MSE over every window of the sampler."""
    total_sq = 0.0
    count = 0
    for batch in sampler.batches(batch_size):
        pred = forward(cfg, params, batch.x).data
        total_sq += float(((pred - batch.y) ** 2).sum())
        count += batch.y.size
    return total_sq / count


def predict_all(
    cfg: ModelConfig,
    params: dict[str, Tensor],
    sampler: WindowSampler,
    batch_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated (pred, true) over the sampler, in origin order."""
    preds, trues = [], []
    for batch in sampler.batches(batch_size):
        preds.append(forward(cfg, params, batch.x).data)
        trues.append(batch.y)
    return np.concatenate(preds), np.concatenate(trues)


def train_model(
    cfg: ModelConfig,
    train_split: Series,
    val_split: Series,
    settings: TrainSettings,
    seed: int = 0,
) -> TrainResult:
    """Fit ``cfg`` on the train split, early-stopping on validation MSE.

    Returns the parameters of the best validation epoch.
    """
    init_rng = np.random.default_rng([seed, 101])
    shuffle_rng = np.random.default_rng([seed, 202])
    params = init_params(cfg, init_rng)
    optimizer = Adam(
        params, lr=settings.lr, betas=(settings.beta1, settings.beta2), eps=settings.eps
    )
    train_sampler = WindowSampler(train_split, cfg.lookback, cfg.horizon)
    val_sampler = WindowSampler(val_split, cfg.lookback, cfg.horizon)

    result = TrainResult(params=params)
    best_val = np.inf
    best_snapshot = {k: p.data.copy() for k, p in params.items()}
    stale = 0
    for epoch in range(1, settings.max_epochs + 1):
        start = time.perf_counter()
        batch_losses = []
        for batch in train_sampler.batches(settings.batch_size, shuffle=shuffle_rng):
            optimizer.zero_grad()
            loss = mse_loss(forward(cfg, params, batch.x), constant(batch.y))
            loss.backward()
            optimizer.step()
            batch_losses.append(loss.item() * batch.y.size)
        train_mse = float(np.sum(batch_losses) / (len(train_sampler) * cfg.horizon * cfg.channels))
        val_mse = evaluate_mse(cfg, params, val_sampler, settings.batch_size)
        result.history.append(
            EpochStats(
                epoch=epoch,
                train_mse=train_mse,
                val_mse=val_mse,
                seconds=time.perf_counter() - start,
            )
        )
        if val_mse < best_val:
            best_val = val_mse
            best_snapshot = {k: p.data.copy() for k, p in params.items()}
            result.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= settings.patience:
                break
    for name, p in params.items():
        p.data = best_snapshot[name]
    return result


def evaluate_model(
    cfg: ModelConfig,
    params: dict[str, Tensor],
    test_split: Series,
    batch_size: int = 32,
) -> dict:
    """Test-set metrics plus the per-horizon-step breakdown.

    Accumulates per-step error sums batch by batch instead of materializing
    every prediction (wide datasets would otherwise cost gigabytes).
    """
    sampler = WindowSampler(test_split, cfg.lookback, cfg.horizon)
    sq_sum = np.zeros(cfg.horizon)
    abs_sum = np.zeros(cfg.horizon)
    windows = 0
    for batch in sampler.batches(batch_size):
        diff = forward(cfg, params, batch.x).data - batch.y
        sq_sum += (diff**2).sum(axis=(0, 2))
        abs_sum += np.abs(diff).sum(axis=(0, 2))
        windows += batch.y.shape[0]
    per_step = windows * cfg.channels
    step_mse = sq_sum / per_step
    step_mae = abs_sum / per_step
    return {
        "mse": float(step_mse.mean()),
        "mae": float(step_mae.mean()),
        "per_horizon_mse": [float(v) for v in step_mse],
        "per_horizon_mae": [float(v) for v in step_mae],
        "windows": windows,
    }
