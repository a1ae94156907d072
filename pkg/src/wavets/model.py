"""WaveTS model family: variants assembled from the transform, RevIN,
the autodiff ops, and (for the M variant) the mixture of experts.

All variants share one pipeline: per-window normalization, one-level
wavelet split of each channel's lookback, half-length linear heads, a
delta-weighted fusion of the high-frequency prediction, and inverse
normalization. Variants differ only in which heads exist and how the
low-frequency band is mapped:

  B   low-pass linear head + delta * high-pass linear head
  S   low-pass head only (no delta parameter)
  LF  ablation alias of S
  HF  delta * high-pass head only
  M   mixture-of-experts low-pass head + delta * high-pass head
  I   half-horizon heads per band fused by the inverse transform

Parameters live in a flat name -> Tensor dict so the optimizer and the
checkpoint format stay oblivious to the architecture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import moe as moe_mod
from .autodiff import (
    Tensor,
    add,
    constant,
    dwt_pair,
    idwt_pair,
    linear,
    mse_loss,
    mul,
    relu,
    swap_last2,
)
from .exceptions import ConfigMismatchError, InvalidConfigError, ShapeMismatchError
from .revin import revin_forward, revin_inverse
from .wavelet import get_bank

VARIANTS = ("B", "S", "M", "I", "LF", "HF")

# Which variants carry a high-frequency weighting parameter at all.
_DELTA_VARIANTS = ("B", "M", "I", "HF")


@dataclass(frozen=True)
class ModelConfig:
    variant: str
    lookback: int
    horizon: int
    channels: int
    bank: str = "haar"
    delta_mode: str = "learnable"  # or "fixed"
    delta_init: float = 1.0
    delta_per_channel: bool = False
    revin_affine: bool = True
    lf_hidden: int = 0  # 0 keeps the low-pass head a single linear map
    moe: moe_mod.MoEConfig | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise InvalidConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.lookback < 2 or self.lookback % 2:
            raise InvalidConfigError(f"lookback must be even and >= 2, got {self.lookback}")
        if self.horizon < 1:
            raise InvalidConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.channels < 1:
            raise InvalidConfigError(f"channels must be >= 1, got {self.channels}")
        if self.variant == "I" and self.horizon % 2:
            raise InvalidConfigError("variant I needs an even horizon (heads emit S/2 each)")
        if self.variant == "M" and self.moe is None:
            raise InvalidConfigError("variant M requires an MoE config")
        if self.variant != "M" and self.moe is not None:
            raise InvalidConfigError(f"variant {self.variant} must not carry an MoE config")
        if self.delta_mode not in ("learnable", "fixed"):
            raise InvalidConfigError(f"delta_mode must be learnable or fixed, got {self.delta_mode!r}")
        if self.lf_hidden < 0:
            raise InvalidConfigError(f"lf_hidden must be >= 0, got {self.lf_hidden}")
        if self.lf_hidden and self.variant not in ("B", "S", "LF"):
            raise InvalidConfigError("lf_hidden only applies to variants B, S and LF")
        get_bank(self.bank)  # raises on unknown names

    @property
    def half(self) -> int:
        return self.lookback // 2

    def has_delta(self) -> bool:
        return self.variant in _DELTA_VARIANTS and self.delta_mode == "learnable"

    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "lookback": self.lookback,
            "horizon": self.horizon,
            "channels": self.channels,
            "bank": self.bank,
            "delta_mode": self.delta_mode,
            "delta_init": self.delta_init,
            "delta_per_channel": self.delta_per_channel,
            "revin_affine": self.revin_affine,
            "lf_hidden": self.lf_hidden,
        }
        if self.moe is not None:
            out["moe"] = {"num_experts": self.moe.num_experts, "hidden": self.moe.hidden}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        moe_cfg = data.pop("moe", None)
        if moe_cfg is not None:
            moe_cfg = moe_mod.MoEConfig(**moe_cfg)
        return cls(moe=moe_cfg, **data)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Learnable parameter names and shapes, in deterministic init order."""
    half, horizon, channels = cfg.half, cfg.horizon, cfg.channels
    shapes: dict[str, tuple[int, ...]] = {}
    if cfg.variant in ("B", "S", "LF"):
        if cfg.lf_hidden:
            shapes["lf.w1"] = (half, cfg.lf_hidden)
            shapes["lf.b1"] = (cfg.lf_hidden,)
            shapes["lf.w2"] = (cfg.lf_hidden, horizon)
            shapes["lf.b2"] = (horizon,)
        else:
            shapes["lf.weight"] = (half, horizon)
            shapes["lf.bias"] = (horizon,)
    if cfg.variant in ("B", "M", "HF"):
        shapes["hf.weight"] = (half, horizon)
        shapes["hf.bias"] = (horizon,)
    if cfg.variant == "I":
        shapes["lf.weight"] = (half, horizon // 2)
        shapes["lf.bias"] = (horizon // 2,)
        shapes["hf.weight"] = (half, horizon // 2)
        shapes["hf.bias"] = (horizon // 2,)
    if cfg.variant == "M":
        assert cfg.moe is not None
        for name, shape in moe_mod.param_shapes(cfg.moe, half, horizon).items():
            shapes[f"moe.{name}"] = shape
    if cfg.has_delta():
        shapes["delta"] = (channels, 1) if cfg.delta_per_channel else ()
    if cfg.revin_affine:
        shapes["revin.gain"] = (channels,)
        shapes["revin.bias"] = (channels,)
    return shapes


def init_params(cfg: ModelConfig, seed: int | np.random.Generator = 0) -> dict[str, Tensor]:
    """Seeded init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero,
    delta at its configured start, affine gain one."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if name == "delta":
            data = np.full(shape, cfg.delta_init)
        elif leaf == "gain":
            data = np.ones(shape)
        elif leaf in ("bias", "b1", "b2"):
            data = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            data = rng.uniform(-bound, bound, size=shape)
        params[name] = Tensor(data, requires_grad=True)
    return params


def _check_params(cfg: ModelConfig, params: dict[str, Tensor]) -> None:
    expected = param_shapes(cfg)
    if set(params) != set(expected):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise ConfigMismatchError(
            f"parameter set does not match config (missing={missing}, unexpected={extra})"
        )
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise ConfigMismatchError(
                f"parameter {name!r} has shape {params[name].shape}, config expects {shape}"
            )


def _delta(cfg: ModelConfig, params: dict[str, Tensor]) -> Tensor:
    if cfg.has_delta():
        return params["delta"]
    if cfg.delta_per_channel:
        return constant(np.full((cfg.channels, 1), cfg.delta_init))
    return constant(cfg.delta_init)


def _lf_head(cfg: ModelConfig, params: dict[str, Tensor], band: Tensor) -> Tensor:
    if cfg.lf_hidden:
        hidden = relu(linear(band, params["lf.w1"], params["lf.b1"]))
        return linear(hidden, params["lf.w2"], params["lf.b2"])
    return linear(band, params["lf.weight"], params["lf.bias"])


def forward(cfg: ModelConfig, params: dict[str, Tensor], x: Tensor | np.ndarray) -> Tensor:
    """Predict (B, S, N) from a lookback batch (B, L, N)."""
    x_tensor = x if isinstance(x, Tensor) else constant(np.asarray(x, dtype=np.float64))
    if x_tensor.ndim != 3 or x_tensor.shape[1] != cfg.lookback or x_tensor.shape[2] != cfg.channels:
        raise ShapeMismatchError(
            f"input shape {x_tensor.shape} does not match (B, {cfg.lookback}, {cfg.channels})"
        )
    _check_params(cfg, params)
    bank = get_bank(cfg.bank)

    gain = params.get("revin.gain")
    bias = params.get("revin.bias")
    normalized, state = revin_forward(x_tensor, gain, bias)
    per_channel = swap_last2(normalized)  # (B, N, L)
    approx, detail = dwt_pair(per_channel, bank)  # (B, N, L/2)

    if cfg.variant in ("S", "LF"):
        fused = _lf_head(cfg, params, approx)
    elif cfg.variant == "B":
        low = _lf_head(cfg, params, approx)
        high = linear(detail, params["hf.weight"], params["hf.bias"])
        fused = add(low, mul(_delta(cfg, params), high))
    elif cfg.variant == "HF":
        high = linear(detail, params["hf.weight"], params["hf.bias"])
        fused = mul(_delta(cfg, params), high)
    elif cfg.variant == "M":
        assert cfg.moe is not None
        low = moe_mod.moe_forward(params, cfg.moe, approx, prefix="moe.")
        high = linear(detail, params["hf.weight"], params["hf.bias"])
        fused = add(low, mul(_delta(cfg, params), high))
    else:  # variant I: predict per band at half horizon, fuse by synthesis
        low = linear(approx, params["lf.weight"], params["lf.bias"])
        high = linear(detail, params["hf.weight"], params["hf.bias"])
        fused = idwt_pair(low, mul(_delta(cfg, params), high), bank)

    return revin_inverse(swap_last2(fused), state)


def predict(cfg: ModelConfig, params: dict[str, Tensor], x: np.ndarray) -> np.ndarray:
    """Forward pass returning a plain array."""
    return forward(cfg, params, x).data


def low_frequency_band(cfg: ModelConfig, params: dict[str, Tensor], x: np.ndarray) -> np.ndarray:
    """The normalized (B, N, L/2) approximation band the low-pass head sees.

    Plain-numpy replica of the forward prologue, used for gate diagnostics.
    """
    from .revin import compute_stats
    from .wavelet import dwt_arrays

    x = np.asarray(x, dtype=np.float64)
    mean, std = compute_stats(x)
    normalized = (x - mean[:, None, :]) / std[:, None, :]
    if "revin.gain" in params:
        normalized = normalized * params["revin.gain"].data + params["revin.bias"].data
    approx, _ = dwt_arrays(np.swapaxes(normalized, -1, -2), get_bank(cfg.bank))
    return approx


def loss_and_grads(
    cfg: ModelConfig,
    params: dict[str, Tensor],
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE against the horizon plus gradients for every learnable tensor."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 3 or y.shape[1] != cfg.horizon or y.shape[2] != cfg.channels:
        raise ShapeMismatchError(
            f"target shape {y.shape} does not match (B, {cfg.horizon}, {cfg.channels})"
        )
    for p in params.values():
        p.zero_grad()
    loss = mse_loss(forward(cfg, params, x), constant(y))
    loss.backward()
    grads = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }
    return loss.item(), grads


def config_sidecar_path(checkpoint_path: str | Path) -> Path:
    path = Path(checkpoint_path)
    return path.with_name(path.stem + ".config.json")


def save_model(cfg: ModelConfig, params: dict[str, Tensor], checkpoint_path: str | Path) -> None:
    """Write the checkpoint plus its model-config sidecar."""
    ckpt.save_params(params, checkpoint_path)
    config_sidecar_path(checkpoint_path).write_text(
        json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n"
    )


def load_model(checkpoint_path: str | Path) -> tuple[ModelConfig, dict[str, Tensor]]:
    """Load checkpoint + sidecar; validates the parameter count against the
    config's closed form before returning."""
    from .evaluation import count_params  # local import to avoid a cycle

    cfg = ModelConfig.from_dict(json.loads(config_sidecar_path(checkpoint_path).read_text()))
    raw = ckpt.load_params(checkpoint_path)
    params = {name: Tensor(values, requires_grad=True) for name, values in raw.items()}
    _check_params(cfg, params)
    live = sum(p.data.size for p in params.values())
    expected = count_params(cfg).total
    if live != expected:
        raise ConfigMismatchError(
            f"checkpoint holds {live} parameters but config expects {expected}"
        )
    return cfg, params
