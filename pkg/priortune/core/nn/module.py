"""Parameter containers with dotted-path naming."""

from __future__ import annotations

import zlib
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from priortune.core.autodiff import Parameter


def component_rng(seed: int, component: str) -> np.random.Generator:
    """Generator for one named component, independent of construction order."""
    return np.random.default_rng([int(seed), zlib.crc32(component.encode("utf-8"))])


class Module:
    """
    Base class for anything that owns parameters.

    Parameters and sub-modules are discovered from instance attributes in
    assignment order; lists and string-keyed dicts of them are walked too.
    Attributes starting with an underscore are ignored.
    """

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    # ---------------- traversal ---------------- #

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        seen: set[int] = set()
        for name, param in self._walk(prefix):
            if id(param) in seen:
                continue
            seen.add(id(param))
            yield name, param

    def _walk(self, prefix: str) -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            yield from _walk_value(value, f"{prefix}{attr}")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def bind_names(self, prefix: str = "") -> None:
        """Stamp every parameter with its dotted path."""
        for name, param in self.named_parameters(prefix):
            param.name = name

    # ---------------- training state ---------------- #

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def freeze(self) -> None:
        for p in self.parameters():
            p.trainable = False

    # ---------------- state dict ---------------- #

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters(prefix)}

    def load_state_dict(
        self, state: Dict[str, np.ndarray], *, prefix: str = "", strict: bool = True
    ) -> List[str]:
        """
        Copy arrays into matching parameters.

        Returns:
            Names present in the module but missing from ``state``.

        Raises:
            ValueError: On a shape mismatch, or in strict mode when names are
                missing or unexpected.
        """
        own = dict(self.named_parameters(prefix))
        missing = [name for name in own if name not in state]
        unexpected = [name for name in state if name.startswith(prefix) and name not in own]

        if strict and (missing or unexpected):
            raise ValueError(
                f"State mismatch: missing {missing[:5]}{'...' if len(missing) > 5 else ''}, "
                f"unexpected {unexpected[:5]}{'...' if len(unexpected) > 5 else ''}"
            )

        for name, param in own.items():
            if name not in state:
                continue
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise ValueError(
                    f"Shape mismatch for '{name}': checkpoint {value.shape} vs model {param.shape}"
                )
            param.data[...] = value

        return missing


def _walk_value(value: Any, path: str) -> Iterator[Tuple[str, Parameter]]:
    if isinstance(value, Parameter):
        yield path, value
    elif isinstance(value, Module):
        yield from value._walk(f"{path}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk_value(item, f"{path}.{i}")
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _walk_value(item, f"{path}.{key}")
