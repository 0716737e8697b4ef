"""Adam with decoupled weight decay over :class:`Parameter` objects."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

from priortune.core.autodiff import Parameter


@dataclass(slots=True)
class MomentState:
    """Per-parameter optimizer state."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0


@dataclass
class AdamWState:
    moments: Dict[str, MomentState] = field(default_factory=dict)


def adamw_step(
    params: Iterable[Parameter],
    state: AdamWState,
    *,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """
    Apply one AdamW update in place.

    Frozen parameters are skipped without touching their payload.

    Raises:
        ValueError: If a trainable parameter has no gradient.
    """
    active: List[Parameter] = [p for p in params if p.trainable]
    for p in active:
        if p.grad is None:
            raise ValueError(f"Trainable parameter '{p.name}' has no gradient")

    for p in active:
        moments = state.moments.get(p.name)
        if moments is None:
            moments = MomentState(np.zeros_like(p.data), np.zeros_like(p.data))
            state.moments[p.name] = moments

        g = p.grad
        moments.t += 1
        moments.m *= beta1
        moments.m += (1.0 - beta1) * g
        moments.v *= beta2
        moments.v += (1.0 - beta2) * g * g

        alpha_t = lr * math.sqrt(1.0 - beta2**moments.t) / (1.0 - beta1**moments.t)
        p.data *= 1.0 - lr * weight_decay
        p.data -= alpha_t * (moments.m / (np.sqrt(moments.v) + eps))


class AdamW:
    """Stateful wrapper around :func:`adamw_step`."""

    def __init__(
        self,
        params: Iterable[Parameter],
        *,
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ) -> None:
        if lr < 0:
            raise ValueError(f"Invalid learning rate: {lr}")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamWState()

    def step(self) -> None:
        adamw_step(
            self.params,
            self.state,
            lr=self.lr,
            beta1=self.betas[0],
            beta2=self.betas[1],
            eps=self.eps,
            weight_decay=self.weight_decay,
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    # ---------------- serialization ---------------- #

    def _ordered_moments(self) -> List[Tuple[str, MomentState]]:
        return [(p.name, self.state.moments[p.name]) for p in self.params if p.name in self.state.moments]

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Moment tensors keyed ``optim.m/<name>`` and ``optim.v/<name>``, in parameter order."""
        arrays: Dict[str, np.ndarray] = {}
        for name, moments in self._ordered_moments():
            arrays[f"optim.m/{name}"] = moments.m
            arrays[f"optim.v/{name}"] = moments.v
        return arrays

    def step_counts(self) -> Dict[str, int]:
        return {name: moments.t for name, moments in self._ordered_moments()}

    def load_state(self, arrays: Dict[str, np.ndarray], step_counts: Dict[str, int]) -> None:
        """
        Replace the moments with saved ones.

        The state is rebuilt in parameter order regardless of the order of
        ``step_counts``.
        """
        self.state = AdamWState()
        for p in self.params:
            if p.name not in step_counts:
                continue
            self.state.moments[p.name] = MomentState(
                m=np.array(arrays[f"optim.m/{p.name}"], dtype=np.float64),
                v=np.array(arrays[f"optim.v/{p.name}"], dtype=np.float64),
                t=int(step_counts[p.name]),
            )
