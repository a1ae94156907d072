"""Minimal reverse-mode automatic differentiation on numpy buffers.

A :class:`Tensor` wraps a float64 array plus an optional gradient buffer.
Every operation records its inputs and a backward closure on the result,
so the implicit tape is just the DAG of live tensors; ``backward()`` on a
scalar walks it once in reverse topological order. Only the handful of op
kinds the forecasters need exist here - dense affine maps, ReLU, softmax,
elementwise arithmetic with broadcasting, axis swaps, the (fixed, linear)
wavelet analysis/synthesis pair, and mean-squared-error reduction.

Gradients accumulate (``+=``) so shared subexpressions are handled; the
tape is single-threaded per forward/backward pass, while distinct model
instances may run concurrently.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from . import wavelet
from .exceptions import NonFiniteInputError, ShapeMismatchError

Array = np.ndarray


class Tensor:
    """A float64 array with an optional gradient and tape linkage."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[Array], None] | None = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _needs_grad(self) -> bool:
        return self.requires_grad or bool(self._parents)

    def _accumulate(self, g: Array) -> None:
        if not self._needs_grad():
            return
        if self.grad is None:
            # copy: backward closures may hand us views of their own buffers
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self) -> None:
        """Backpropagate from a scalar result, accumulating into ``.grad``."""
        if self.data.size != 1:
            raise ShapeMismatchError("backward() requires a scalar tensor")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Operator sugar; constants are wrapped on the fly.
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(data) -> Tensor:
    """A tensor outside the tape (no gradient ever flows into it)."""
    return Tensor(data)


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(g: Array) -> None:
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return Tensor(out_data, _parents=(a, b), _backward=backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def backward(g: Array) -> None:
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))

    return Tensor(out_data, _parents=(a, b), _backward=backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(g: Array) -> None:
        a._accumulate(_unbroadcast(g * b.data, a.shape))
        b._accumulate(_unbroadcast(g * a.data, b.shape))

    return Tensor(out_data, _parents=(a, b), _backward=backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data / b.data

    def backward(g: Array) -> None:
        a._accumulate(_unbroadcast(g / b.data, a.shape))
        b._accumulate(_unbroadcast(-g * out_data / b.data, b.shape))

    return Tensor(out_data, _parents=(a, b), _backward=backward)


def neg(a: Tensor) -> Tensor:
    def backward(g: Array) -> None:
        a._accumulate(-g)

    return Tensor(-a.data, _parents=(a,), _backward=backward)


def matmul(x: Tensor, w: Tensor) -> Tensor:
    """``x @ w`` with ``x`` of shape (..., Din) and ``w`` of shape (Din, Dout)."""
    if x.ndim < 2 or w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeMismatchError(f"cannot matmul {x.shape} with {w.shape}")
    out_data = x.data @ w.data

    def backward(g: Array) -> None:
        x._accumulate(g @ w.data.T)
        flat_x = x.data.reshape(-1, x.shape[-1])
        flat_g = g.reshape(-1, w.shape[-1])
        w._accumulate(flat_x.T @ flat_g)

    return Tensor(out_data, _parents=(x, w), _backward=backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``x @ weight + bias`` broadcast over leading axes."""
    if bias.shape != (weight.shape[-1],):
        raise ShapeMismatchError(f"bias shape {bias.shape} does not match {weight.shape}")
    return add(matmul(x, weight), bias)


def relu(x: Tensor) -> Tensor:
    if not np.isfinite(x.data).all():
        raise NonFiniteInputError("relu input contains non-finite values")
    mask = x.data > 0

    def backward(g: Array) -> None:
        x._accumulate(g * mask)

    return Tensor(np.where(mask, x.data, 0.0), _parents=(x,), _backward=backward)


def softmax_lastdim(x: Tensor) -> Tensor:
    """Row-stable softmax over the last axis (max-subtraction)."""
    if not np.isfinite(x.data).all():
        raise NonFiniteInputError("softmax input contains non-finite values")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out_data = exp / exp.sum(axis=-1, keepdims=True)

    def backward(g: Array) -> None:
        inner = (g * out_data).sum(axis=-1, keepdims=True)
        x._accumulate((g - inner) * out_data)

    return Tensor(out_data, _parents=(x,), _backward=backward)


def mean(x: Tensor) -> Tensor:
    """Mean over all elements, as a scalar tensor."""
    size = x.data.size

    def backward(g: Array) -> None:
        x._accumulate(np.full_like(x.data, float(g) / size))

    return Tensor(x.data.mean(), _parents=(x,), _backward=backward)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean of squared differences; gradient is 2*(pred-target)/count."""
    target = _wrap(target)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = sub(pred, target)
    return mean(mul(diff, diff))


def swap_last2(x: Tensor) -> Tensor:
    """Transpose the trailing two axes."""
    if x.ndim < 2:
        raise ShapeMismatchError("need at least 2 axes to swap")

    def backward(g: Array) -> None:
        x._accumulate(np.swapaxes(g, -1, -2))

    return Tensor(np.swapaxes(x.data, -1, -2), _parents=(x,), _backward=backward)


def slice_lastdim(x: Tensor, index: int) -> Tensor:
    """Keep-dims slice ``x[..., index:index+1]``."""

    def backward(g: Array) -> None:
        full = np.zeros_like(x.data)
        full[..., index : index + 1] = g
        x._accumulate(full)

    return Tensor(x.data[..., index : index + 1], _parents=(x,), _backward=backward)


def dwt_pair(x: Tensor, bank: wavelet.FilterBank) -> tuple[Tensor, Tensor]:
    """Differentiable one-level analysis on the last axis.

    The transform is orthogonal, so the vector-Jacobian product of each
    band is the synthesis of that band alone.
    """
    approx_data, detail_data = wavelet.dwt_arrays(x.data, bank)

    def backward_approx(g: Array) -> None:
        x._accumulate(wavelet.synthesize_band(g, bank.low_pass))

    def backward_detail(g: Array) -> None:
        x._accumulate(wavelet.synthesize_band(g, bank.high_pass))

    approx = Tensor(approx_data, _parents=(x,), _backward=backward_approx)
    detail = Tensor(detail_data, _parents=(x,), _backward=backward_detail)
    return approx, detail


def idwt_pair(approx: Tensor, detail: Tensor, bank: wavelet.FilterBank) -> Tensor:
    """Differentiable one-level synthesis; adjoint of :func:`dwt_pair`."""
    out_data = wavelet.idwt_arrays(approx.data, detail.data, bank)

    def backward(g: Array) -> None:
        g_approx, g_detail = wavelet.dwt_arrays(g, bank)
        approx._accumulate(g_approx)
        detail._accumulate(g_detail)

    return Tensor(out_data, _parents=(approx, detail), _backward=backward)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
