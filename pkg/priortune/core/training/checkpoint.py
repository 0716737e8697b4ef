"""
Versioned little-endian checkpoint files.

Layout: 4-byte magic, ``<I`` format version, ``<Q`` manifest length, UTF-8
JSON manifest, then the raw tensor payloads at the offsets the manifest
records (relative to the end of the manifest).
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from priortune.core.models import TrainConfig
from priortune.core.nn import Module
from priortune.core.optim import AdamW

logger = logging.getLogger(__name__)

MAGIC = b"PTCK"
FORMAT_VERSION = 1
OPTIM_PREFIX = "optim."
_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


@dataclass(slots=True)
class CheckpointRecord:
    version: int
    config: TrainConfig
    iteration: int
    tensors: Dict[str, np.ndarray]
    step_counts: Dict[str, int] = field(default_factory=dict)
    rng_state: Optional[Dict[str, Any]] = None

    @property
    def model_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if not k.startswith(OPTIM_PREFIX)}

    @property
    def optimizer_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith(OPTIM_PREFIX)}

    def restore(
        self,
        model: Module,
        optimizer: Optional[AdamW] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        """Copy the saved state into live objects."""
        model.load_state_dict(self.model_tensors)
        if optimizer is not None:
            optimizer.load_state(self.optimizer_tensors, self.step_counts)
        if rng is not None and self.rng_state is not None:
            rng.bit_generator.state = self.rng_state


def save_checkpoint(
    path: Union[str, Path],
    *,
    model: Module,
    config: TrainConfig,
    iteration: int = 0,
    optimizer: Optional[AdamW] = None,
    rng: Optional[np.random.Generator] = None,
    dtype: str = "<f8",
) -> Path:
    """
    Raises:
        ValueError: For an unsupported storage dtype.
    """
    if dtype not in _DTYPES:
        raise ValueError(f"Unsupported checkpoint dtype '{dtype}', expected one of {list(_DTYPES)}")

    arrays: Dict[str, np.ndarray] = dict(model.state_dict())
    step_counts: Dict[str, int] = {}
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
        step_counts = optimizer.step_counts()

    entries = []
    payloads = []
    offset = 0
    for name, array in arrays.items():
        raw = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes()
        entries.append(
            {"name": name, "shape": list(array.shape), "dtype": dtype, "offset": offset, "nbytes": len(raw)}
        )
        payloads.append(raw)
        offset += len(raw)

    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "iteration": int(iteration),
        "rng_state": rng.bit_generator.state if rng is not None else None,
        "optimizer": {"step_counts": step_counts},
        "tensors": entries,
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for raw in payloads:
            f.write(raw)
    tmp.replace(path)

    logger.info("Checkpoint written: %s (iteration %d, %d tensors)", path, iteration, len(entries))
    return path


def load_checkpoint(path: Union[str, Path]) -> CheckpointRecord:
    """
    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ValueError: For a foreign file, a format version other than the
            supported one, or a truncated payload.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    if len(blob) < 16:
        raise ValueError(f"Checkpoint {path} is truncated inside its header")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(
            f"Checkpoint {path} has format version {version}; this build reads version {FORMAT_VERSION}"
        )
    (length,) = struct.unpack_from("<Q", blob, 8)
    start = 16 + length
    try:
        manifest = json.loads(blob[16:start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"Corrupt checkpoint manifest in {path}: {e}") from e

    tensors: Dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        begin = start + entry["offset"]
        end = begin + entry["nbytes"]
        if end > len(blob):
            raise ValueError(f"Checkpoint {path} is truncated at tensor '{entry['name']}'")
        data = np.frombuffer(blob[begin:end], dtype=_DTYPES[entry["dtype"]])
        tensors[entry["name"]] = data.astype(np.float64).reshape(entry["shape"])

    return CheckpointRecord(
        version=version,
        config=TrainConfig.from_dict(manifest["config"]),
        iteration=int(manifest["iteration"]),
        tensors=tensors,
        step_counts={k: int(v) for k, v in manifest["optimizer"]["step_counts"].items()},
        rng_state=manifest.get("rng_state"),
    )
