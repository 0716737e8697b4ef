"""
Operation tape for reverse-mode differentiation.

Every differentiable operation executed while gradient recording is enabled
appends one record to the active tape of the current thread. ``backward``
walks those records in exact reverse order and clears the tape afterwards.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

if TYPE_CHECKING:
    from priortune.core.autodiff.tensor import Tensor

BackwardFn = Callable[[np.ndarray, Tuple[bool, ...]], Sequence[Optional[np.ndarray]]]


@dataclass(slots=True)
class TapeRecord:
    """One executed operation with the inputs it captured."""

    op: str
    output: "Tensor"
    inputs: Tuple["Tensor", ...]
    backward: BackwardFn


class Tape:
    """Ordered record of executed operations."""

    def __init__(self) -> None:
        self._records: List[TapeRecord] = []
        self.replayed: List[str] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def ops(self) -> List[str]:
        """Names of the recorded operations in execution order."""
        return [record.op for record in self._records]

    def record(
        self,
        op: str,
        output: "Tensor",
        inputs: Sequence["Tensor"],
        backward: BackwardFn,
    ) -> None:
        self._records.append(TapeRecord(op, output, tuple(inputs), backward))

    def clear(self) -> None:
        self._records.clear()

    def backward(self, root: "Tensor", grad: Optional[np.ndarray] = None) -> None:
        """
        Propagate gradients from ``root`` to every tensor that requires them.

        Args:
            root: Tensor the gradient is seeded on.
            grad: Seed gradient. Defaults to ones, which requires a scalar root.

        Raises:
            ValueError: If no seed is given and ``root`` is not a scalar, or the
                seed shape does not match ``root``.
        """
        if grad is None:
            if root.data.size != 1:
                raise ValueError(
                    f"backward() without a seed needs a scalar output, got shape {root.shape}"
                )
            grad = np.ones_like(root.data)
        elif grad.shape != root.data.shape:
            raise ValueError(
                f"Seed gradient shape {grad.shape} does not match output shape {root.shape}"
            )

        root._accumulate(grad)
        self.replayed = []

        try:
            for record in reversed(self._records):
                self.replayed.append(record.op)
                out_grad = record.output.grad
                if out_grad is None:
                    continue

                needs = tuple(t.requires_grad for t in record.inputs)
                input_grads = record.backward(out_grad, needs)

                for tensor, need, g in zip(record.inputs, needs, input_grads):
                    if need and g is not None:
                        tensor._accumulate(g)

                if not record.output.is_leaf:
                    record.output.grad = None
        finally:
            self.clear()


# ---------------- thread-local state ---------------- #


class _State(threading.local):
    def __init__(self) -> None:
        self.tape = Tape()
        self.enabled = True


_state = _State()


def get_tape() -> Tape:
    """Return the active tape of the calling thread."""
    return _state.tape


def grad_enabled() -> bool:
    return _state.enabled


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable operation recording inside the block."""
    previous = _state.enabled
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous
