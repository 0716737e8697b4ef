"""Manifest-backed image/mask dataset."""

from __future__ import annotations

import json
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple, Union

import numpy as np

from priortune.core.data.image_io import read_mask, read_rgb
from priortune.core.data.synthetic import MANIFEST_NAME


class SegmentationDataset:
    """
    Samples listed in ``<root>/manifest.json``, read lazily and cached.

    Raises:
        FileNotFoundError: If the manifest is missing.
        ValueError: If the manifest is malformed.
    """

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        path = self.root / MANIFEST_NAME
        if not path.is_file():
            raise FileNotFoundError(f"Dataset manifest not found: {path}")
        try:
            self._manifest: Dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
            self._samples: List[Dict[str, Any]] = sorted(
                self._manifest["samples"], key=lambda s: s["stem"]
            )
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ValueError(f"Malformed dataset manifest {path}: {e}") from e
        self._cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    @property
    def manifest(self) -> Dict[str, Any]:
        return self._manifest

    @cached_property
    def stems(self) -> List[str]:
        return [s["stem"] for s in self._samples]

    @property
    def image_size(self) -> int:
        return int(self._manifest.get("spec", {}).get("image_size", 0))

    def image_path(self, i: int) -> Path:
        return self.root / self._samples[i]["image"]

    def mask_path(self, i: int) -> Path:
        return self.root / self._samples[i]["mask"]

    def __len__(self) -> int:
        return len(self._samples)

    def __getitem__(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """``([3, H, W] image, [H, W] float mask)``"""
        if i not in self._cache:
            image = read_rgb(self.image_path(i))
            mask = read_mask(self.mask_path(i)).astype(np.float64)
            self._cache[i] = (image, mask)
        return self._cache[i]

    def __iter__(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for i in range(len(self)):
            yield self[i]
