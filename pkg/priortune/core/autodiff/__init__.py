"""Reverse-mode differentiation over numpy arrays."""

from .tape import Tape, get_tape, grad_enabled, no_grad
from .tensor import Tensor, Parameter
from . import ops
from .ops import (
    as_tensor,
    add,
    sub,
    mul,
    div,
    exp,
    log,
    sqrt,
    sigmoid,
    gelu,
    einsum,
    concat,
    stack,
    pad2d,
    softmax,
    layer_norm,
    bce_with_logits,
)
from .conv import conv2d, asymmetric_conv, haar_dwt, haar_idwt, wavelet_conv, same_padding
from .sampling import bilinear_sample, upsample_bilinear, resize_matrix
from .gradcheck import grad_check

__all__ = [
    "Tape",
    "get_tape",
    "grad_enabled",
    "no_grad",
    "Tensor",
    "Parameter",
    "ops",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "exp",
    "log",
    "sqrt",
    "sigmoid",
    "gelu",
    "einsum",
    "concat",
    "stack",
    "pad2d",
    "softmax",
    "layer_norm",
    "bce_with_logits",
    "conv2d",
    "asymmetric_conv",
    "haar_dwt",
    "haar_idwt",
    "wavelet_conv",
    "same_padding",
    "bilinear_sample",
    "upsample_bilinear",
    "resize_matrix",
    "grad_check",
]
