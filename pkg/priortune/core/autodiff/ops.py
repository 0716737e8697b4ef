"""
Differentiable tensor operations.

Each operation computes its forward value with numpy and, when recording is
enabled and some input requires a gradient, registers a backward closure on
the active tape. Backward closures receive the output gradient and a tuple of
flags telling which inputs need a gradient.
"""

from __future__ import annotations

import math
from typing import Any, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf, expit

from priortune.core.autodiff.tape import BackwardFn, get_tape, grad_enabled
from priortune.core.autodiff.tensor import Tensor

ArrayLike = Union[Tensor, np.ndarray, float, int]

LAYER_NORM_EPS = 1e-6
_SQRT_HALF = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------- plumbing ---------------- #


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(op: str, data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    out = Tensor(data)
    if grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.is_leaf = False
        get_tape().record(op, out, parents, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _normalize_axes(axis: Any, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# ---------------- elementwise ---------------- #


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(g, b.shape) if needs[1] else None,
        )

    return _make("add", a.data + b.data, (a, b), backward)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(-g, b.shape) if needs[1] else None,
        )

    return _make("sub", a.data - b.data, (a, b), backward)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g, needs):
        return (
            _unbroadcast(g * b.data, a.shape) if needs[0] else None,
            _unbroadcast(g * a.data, b.shape) if needs[1] else None,
        )

    return _make("mul", a.data * b.data, (a, b), backward)


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g, needs):
        return (
            _unbroadcast(g / b.data, a.shape) if needs[0] else None,
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if needs[1] else None,
        )

    return _make("div", a.data / b.data, (a, b), backward)


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _make("neg", -a.data, (a,), lambda g, needs: (-g,))


def power(a: ArrayLike, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)

    def backward(g, needs):
        return (g * exponent * np.power(a.data, exponent - 1.0),)

    return _make("power", np.power(a.data, exponent), (a,), backward)


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _make("exp", out, (a,), lambda g, needs: (g * out,))


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _make("log", np.log(a.data), (a,), lambda g, needs: (g / a.data,))


def sqrt(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return _make("sqrt", out, (a,), lambda g, needs: (g * 0.5 / out,))


def sigmoid(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = expit(a.data)
    return _make("sigmoid", out, (a,), lambda g, needs: (g * out * (1.0 - out),))


def gelu(a: ArrayLike) -> Tensor:
    """Exact (erf-based) GELU."""
    a = as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _SQRT_HALF))

    def backward(g, needs):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return (g * (cdf + x * pdf),)

    return _make("gelu", x * cdf, (a,), backward)


# ---------------- reductions ---------------- #


def sum(a: ArrayLike, axis: Any = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)

    def backward(g, needs):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make("sum", a.data.sum(axis=axes, keepdims=keepdims), (a,), backward)


def mean(a: ArrayLike, axis: Any = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1

    def backward(g, needs):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _make("mean", a.data.mean(axis=axes, keepdims=keepdims), (a,), backward)


# ---------------- shape ---------------- #


def reshape(a: ArrayLike, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    return _make(
        "reshape",
        a.data.reshape(tuple(shape)),
        (a,),
        lambda g, needs: (g.reshape(a.shape),),
    )


def transpose(a: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _make(
        "transpose",
        np.transpose(a.data, axes),
        (a,),
        lambda g, needs: (np.transpose(g, inverse),),
    )


def _is_basic_index(index: Any) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        item is None or item is Ellipsis or isinstance(item, (int, np.integer, slice))
        for item in items
    )


def getitem(a: ArrayLike, index: Any) -> Tensor:
    a = as_tensor(a)
    basic = _is_basic_index(index)

    def backward(g, needs):
        out = np.zeros_like(a.data)
        if basic:
            out[index] += g
        else:
            np.add.at(out, index, g)
        return (out,)

    return _make("getitem", np.array(a.data[index], copy=True), (a,), backward)


def concat(tensors: Iterable[ArrayLike], axis: int = 0) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    axis = axis % parts[0].ndim
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g, needs):
        return tuple(np.split(g, bounds, axis=axis))

    return _make("concat", np.concatenate([p.data for p in parts], axis=axis), parts, backward)


def stack(tensors: Iterable[ArrayLike], axis: int = 0) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)

    def backward(g, needs):
        return tuple(np.moveaxis(g, axis, 0))

    return _make("stack", np.stack([p.data for p in parts], axis=axis), parts, backward)


def pad2d(a: ArrayLike, pads: Tuple[int, int, int, int]) -> Tensor:
    """Zero-pad the last two axes by ``(top, bottom, left, right)``."""
    a = as_tensor(a)
    top, bottom, left, right = pads
    width = [(0, 0)] * (a.ndim - 2) + [(top, bottom), (left, right)]
    h, w = a.shape[-2], a.shape[-1]

    def backward(g, needs):
        return (g[..., top : top + h, left : left + w].copy(),)

    return _make("pad2d", np.pad(a.data, width), (a,), backward)


# ---------------- contractions ---------------- #


def _parse_einsum(subscripts: str, n_operands: int) -> Tuple[Tuple[str, ...], str]:
    if "->" not in subscripts or "." in subscripts:
        raise ValueError(
            f"einsum needs explicit output subscripts without ellipsis, got '{subscripts}'"
        )
    lhs, out = subscripts.replace(" ", "").split("->")
    inputs = tuple(lhs.split(","))
    if len(inputs) != n_operands:
        raise ValueError(
            f"einsum subscripts '{subscripts}' name {len(inputs)} operands, got {n_operands}"
        )
    for spec in inputs:
        if len(set(spec)) != len(spec):
            raise ValueError(f"einsum operand '{spec}' repeats an index")
    return inputs, out


def einsum(subscripts: str, *operands: ArrayLike) -> Tensor:
    """
    One- or two-operand Einstein summation.

    Every index of an operand must appear in the output or in the other
    operand, so each input gradient is itself an einsum.
    """
    tensors = tuple(as_tensor(t) for t in operands)
    if len(tensors) not in (1, 2):
        raise ValueError(f"einsum supports one or two operands, got {len(tensors)}")
    inputs, out = _parse_einsum(subscripts, len(tensors))

    for i, spec in enumerate(inputs):
        available = set(out) | set("".join(s for j, s in enumerate(inputs) if j != i))
        missing = set(spec) - available
        if missing:
            raise ValueError(
                f"einsum '{subscripts}': index {sorted(missing)} of operand {i} "
                f"is reduced without a partner"
            )

    data = np.einsum(subscripts, *(t.data for t in tensors), optimize=len(tensors) > 1)

    def backward(g, needs):
        if len(tensors) == 1:
            return (np.einsum(f"{out}->{inputs[0]}", g).copy(),)
        a, b = tensors
        ga = (
            np.einsum(f"{out},{inputs[1]}->{inputs[0]}", g, b.data, optimize=True)
            if needs[0]
            else None
        )
        gb = (
            np.einsum(f"{out},{inputs[0]}->{inputs[1]}", g, a.data, optimize=True)
            if needs[1]
            else None
        )
        return ga, gb

    return _make("einsum", data, tensors, backward)


# ---------------- normalization ---------------- #


def softmax(a: ArrayLike, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g, needs):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make("softmax", out, (a,), backward)


def layer_norm(
    x: ArrayLike,
    gamma: ArrayLike,
    beta: ArrayLike,
    eps: float = LAYER_NORM_EPS,
) -> Tensor:
    """Normalize over the last axis with population variance."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def backward(g, needs):
        gx = gg = gb = None
        if needs[0]:
            dxhat = g * gamma.data
            gx = inv_std * (
                dxhat
                - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            )
        if needs[1]:
            gg = (g * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
        if needs[2]:
            gb = g.reshape(-1, g.shape[-1]).sum(axis=0)
        return gx, gg, gb

    return _make("layer_norm", xhat * gamma.data + beta.data, (x, gamma, beta), backward)


# ---------------- losses ---------------- #


def bce_with_logits(logits: ArrayLike, target: ArrayLike) -> Tensor:
    """Mean binary cross-entropy computed in the stable logit form."""
    z = as_tensor(logits)
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if t.shape != z.shape:
        raise ValueError(f"Target shape {t.shape} does not match logits shape {z.shape}")

    per_pixel = np.maximum(z.data, 0.0) - z.data * t + np.log1p(np.exp(-np.abs(z.data)))
    n = z.data.size

    def backward(g, needs):
        return (g * (expit(z.data) - t) / n,)

    return _make("bce_with_logits", np.asarray(per_pixel.mean()), (z,), backward)
