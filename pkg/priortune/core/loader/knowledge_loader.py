"""
Knowledge loader for component ablations.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

import yaml

from priortune.core.models import ComponentSet

KNOWLEDGE_DIR = Path(__file__).resolve().parent.parent / "knowledge"


@dataclass(frozen=True, slots=True)
class AblationEntry:
    name: str
    description: str
    disables: Tuple[str, ...]


class AblationCatalog:
    """
    Named ablations and the components each one switches off.
    """

    def __init__(self, *, entries: Dict[str, AblationEntry]) -> None:
        self.entries = entries

    @property
    def names(self) -> List[str]:
        return list(self.entries)

    @classmethod
    def load(cls, base_path: Path | None = None) -> "AblationCatalog":
        """
        Load ``ablations.yml`` into a catalog.

        Raises:
            FileNotFoundError: If the file is missing.
            ValueError: If an entry is malformed or disables an unknown component.
        """
        if base_path is None:
            base_path = KNOWLEDGE_DIR

        entries: Dict[str, AblationEntry] = {}
        for raw in _load_yaml_list(base_path / "ablations.yml"):
            if not isinstance(raw, dict) or "name" not in raw or "disables" not in raw:
                raise ValueError(f"Malformed ablation entry: {raw!r}")
            entry = AblationEntry(
                name=str(raw["name"]),
                description=str(raw.get("description", "")),
                disables=tuple(str(d) for d in raw["disables"]),
            )
            ComponentSet().disable(*entry.disables)
            entries[entry.name] = entry

        return cls(entries=entries)

    def get(self, name: str) -> AblationEntry:
        if name not in self.entries:
            raise ValueError(f"Unknown ablation '{name}'; available: {self.names}")
        return self.entries[name]

    def resolve_components(
        self, names: Iterable[str], base: ComponentSet | None = None
    ) -> ComponentSet:
        """Components left active after applying every named ablation."""
        components = base or ComponentSet()
        for name in names:
            components = components.disable(*self.get(name).disables)
        return components


def _load_yaml(path: Path) -> Any:
    if not path.exists():
        raise FileNotFoundError(f"Knowledge file not found: {path.name}")

    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def _load_yaml_list(path: Path) -> List[Dict[str, Any]]:
    data = _load_yaml(path)

    if not isinstance(data, list):
        raise ValueError(f"Expected list in {path.name}")

    return data
