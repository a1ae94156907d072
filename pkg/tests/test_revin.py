import numpy as np
import pytest

from wavets.autodiff import Tensor, mean, mul
from wavets.exceptions import DegenerateWindowError, ZeroGainError
from wavets.revin import RevinState, compute_stats, revin_forward, revin_inverse


def _unit_affine(channels):
    gain = Tensor(np.ones(channels), requires_grad=True)
    bias = Tensor(np.zeros(channels), requires_grad=True)
    return gain, bias


def test_hand_computed_three_points():
    x = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
    gain, bias = _unit_affine(1)
    out, state = revin_forward(x, gain, bias)
    # population std sqrt(2/3); the 1e-5 eps shifts values by ~1e-5 at most
    assert np.allclose(out.data.ravel(), [-1.2247, 0.0, 1.2247], atol=1e-4)
    assert abs(state.mean[0, 0] - 2.0) < 1e-12
    assert abs(state.std[0, 0] - np.sqrt(2.0 / 3.0 + 1e-5)) < 1e-12


def test_constant_channel_maps_to_zero():
    x = np.full((1, 3, 1), 5.0)
    out, _ = revin_forward(x, *_unit_affine(1))
    assert np.array_equal(out.data, np.zeros((1, 3, 1)))


def test_output_statistics_random():
    rng = np.random.default_rng(0)
    # variance well above eps so normalized variance is 1 within 1e-6
    x = rng.normal(scale=6.0, size=(4, 64, 3))
    out, _ = revin_forward(x, *_unit_affine(3))
    means = out.data.mean(axis=1)
    variances = out.data.var(axis=1)
    assert np.max(np.abs(means)) < 1e-6
    assert np.max(np.abs(variances - 1.0)) < 1e-6


def test_degenerate_window_rejected():
    with pytest.raises(DegenerateWindowError):
        compute_stats(np.ones((2, 1, 3)))


def test_roundtrip_float64():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 8, 3)) * 4 + 1.5
    gain = Tensor(rng.uniform(0.5, 2.0, size=3), requires_grad=True)
    bias = Tensor(rng.normal(size=3), requires_grad=True)
    out, state = revin_forward(x, gain, bias)
    back = revin_inverse(out, state)
    assert np.max(np.abs(back.data - x)) < 1e-12


def test_identity_state():
    y = np.random.default_rng(2).normal(size=(1, 4, 2))
    state = RevinState(
        mean=np.zeros((1, 2)), std=np.ones((1, 2)), eps=1e-5,
        gain=Tensor(np.ones(2)), bias=Tensor(np.zeros(2)),
    )
    assert np.allclose(revin_inverse(y, state).data, y, atol=1e-15)


def test_inverse_of_forward_example():
    x = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
    out, state = revin_forward(x, *_unit_affine(1))
    assert np.allclose(revin_inverse(out, state).data, x, atol=1e-12)


def test_zero_gain_rejected():
    x = np.random.default_rng(3).normal(size=(1, 4, 2))
    gain = Tensor(np.array([1.0, 0.0]))
    out, state = revin_forward(x, gain, Tensor(np.zeros(2)))
    with pytest.raises(ZeroGainError):
        revin_inverse(out, state)


def test_statistics_use_lookback_only():
    # same lookback, different "future": identical stats and outputs
    rng = np.random.default_rng(4)
    lookback = rng.normal(size=(2, 16, 3))
    out_a, state_a = revin_forward(lookback, *_unit_affine(3))
    out_b, state_b = revin_forward(lookback.copy(), *_unit_affine(3))
    assert np.array_equal(state_a.mean, state_b.mean)
    assert np.array_equal(state_a.std, state_b.std)
    assert np.array_equal(out_a.data, out_b.data)


def test_affine_parameters_receive_gradients():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 8, 3))
    gain, bias = _unit_affine(3)
    out, state = revin_forward(x, gain, bias)
    restored = revin_inverse(mul(out, out), state)
    mean(restored).backward()
    assert gain.grad is not None and np.any(gain.grad != 0)
    assert bias.grad is not None and np.any(bias.grad != 0)
