"""Central-difference gradient verification."""

from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from priortune.core.autodiff.tape import no_grad
from priortune.core.autodiff.tensor import Tensor

logger = logging.getLogger(__name__)


def grad_check(
    closure: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-5,
    *,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Compare analytic gradients of a scalar closure with central differences.

    Args:
        closure: Zero-argument callable returning a single-element tensor.
        inputs: Tensors to differentiate against; they must require gradients.
        h: Finite-difference step.
        max_coords: If given, check at most this many randomly chosen
            coordinates per input.
        rng: Generator used for coordinate sampling.

    Returns:
        max over checked coordinates of
        ``|analytic − numeric| / max(1, |analytic|, |numeric|)``.

    Raises:
        ValueError: If the closure output is not a scalar, or an input does
            not require gradients.
    """
    for tensor in inputs:
        if not tensor.requires_grad:
            raise ValueError(f"grad_check input {tensor!r} does not require gradients")
        tensor.data = np.ascontiguousarray(tensor.data)
        tensor.grad = None

    out = closure()
    if out.size != 1:
        raise ValueError(f"grad_check needs a scalar closure output, got shape {out.shape}")
    out.backward()

    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0

    for tensor in inputs:
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))

        for coord in coords:
            original = flat[coord]
            with no_grad():
                flat[coord] = original + h
                plus = closure().item()
                flat[coord] = original - h
                minus = closure().item()
            flat[coord] = original

            numeric = (plus - minus) / (2.0 * h)
            exact = analytic.reshape(-1)[coord]
            err = abs(exact - numeric) / max(1.0, abs(exact), abs(numeric))
            worst = max(worst, err)

    logger.debug("grad_check over %d inputs: max relative error %.3e", len(inputs), worst)
    return worst
