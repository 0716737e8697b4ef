"""Configuration models for training, data generation and ablations."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Tuple

from priortune.utils.enums import Ablation, ExpertType, FusionMode, ImageFormat, ShapeFamily

VALID_STAGES = (0, 2, 4, 6)


# ---------------- Backbone ---------------- #


@dataclass(frozen=True, slots=True)
class BackboneConfig:
    """Frozen encoder geometry."""

    embed_dim: int = 64
    depth: int = 8
    num_heads: int = 4
    mlp_ratio: int = 4
    patch_size: int = 16
    seed: int = 0


# ---------------- Components ---------------- #


@dataclass(frozen=True, slots=True)
class ComponentSet:
    """
    Which trainable parts are active.

    ``specific`` covers the whole task-specific branch; the other flags only
    matter while it is on.
    """

    specific: bool = True
    experts: bool = True
    inject: bool = True
    extract: bool = True
    case: bool = True

    def disable(self, *names: str) -> "ComponentSet":
        unknown = [n for n in names if n not in _COMPONENT_NAMES]
        if unknown:
            raise ValueError(f"Unknown component(s) {unknown}; expected {sorted(_COMPONENT_NAMES)}")
        return replace(self, **{n: False for n in names})

    def intersect(self, other: "ComponentSet") -> "ComponentSet":
        return ComponentSet(**{n: getattr(self, n) and getattr(other, n) for n in _COMPONENT_NAMES})

    @property
    def uses_adapter(self) -> bool:
        return self.specific and (self.inject or self.extract or self.case)


_COMPONENT_NAMES = ("specific", "experts", "inject", "extract", "case")


# ---------------- Training ---------------- #


@dataclass(frozen=True)
class TrainConfig:
    """
    Full training configuration; defaults form the desk profile.
    """

    image_size: int = 64
    embed_dim: int = 64
    depth: int = 8
    num_heads: int = 4
    mlp_ratio: int = 4
    backbone_seed: int = 0
    extractor_dim: int = 32
    experts: Tuple[int, ...] = (1, 2, 3, 4)
    fusion: str = FusionMode.GATE.value
    adapter_heads: int = 4
    adapter_points: int = 4
    deform_ratio: float = 0.25
    case_reduction: int = 4
    decoder_dim: int = 16
    stages: int = 4
    lr: float = 1e-3
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 2000
    batch_size: int = 4
    alpha: float = 5.0
    beta: float = 2.0
    seed: int = 7
    checkpoint_every: int = 500
    log_every: int = 50
    ablate: Tuple[str, ...] = ()
    full_finetune: bool = False

    # ---------------- derived ---------------- #

    @property
    def backbone(self) -> BackboneConfig:
        return BackboneConfig(
            embed_dim=self.embed_dim,
            depth=self.depth,
            num_heads=self.num_heads,
            mlp_ratio=self.mlp_ratio,
            seed=self.backbone_seed,
        )

    @property
    def value_dim(self) -> int:
        """Reduced width of the deformable-attention value projection."""
        return int(round(self.embed_dim * self.deform_ratio))

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        """Return a validated copy with ``overrides`` applied (``None`` values skipped)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "ablate" in changes:
            changes["ablate"] = tuple(changes["ablate"])
        if "experts" in changes:
            changes["experts"] = tuple(int(e) for e in changes["experts"])
        updated = replace(self, **changes)
        updated.validate()
        return updated

    def validate(self) -> None:
        """
        Check cross-field invariants.

        Raises:
            ValueError: Naming the offending key.
        """
        checks = [
            ("image_size", self.image_size > 0 and self.image_size % 32 == 0,
             f"must be a positive multiple of 32, got {self.image_size}"),
            ("stages", self.stages in VALID_STAGES,
             f"must be one of {VALID_STAGES}, got {self.stages}"),
            ("depth", self.depth > 0 and (self.stages == 0 or self.depth % self.stages == 0),
             f"must be positive and divisible by stages={self.stages}, got {self.depth}"),
            ("alpha", self.alpha > 0, f"must be > 0, got {self.alpha}"),
            ("beta", self.beta > 0, f"must be > 0, got {self.beta}"),
            ("embed_dim", self.embed_dim > 0 and self.embed_dim % 4 == 0,
             f"must be a positive multiple of 4, got {self.embed_dim}"),
            ("num_heads", self.num_heads > 0 and self.embed_dim % self.num_heads == 0,
             f"must divide embed_dim={self.embed_dim}, got {self.num_heads}"),
            ("deform_ratio", self.value_dim > 0 and self.value_dim % self.adapter_heads == 0,
             f"gives value width {self.value_dim}, not divisible by adapter_heads={self.adapter_heads}"),
            ("adapter_points", self.adapter_points > 0, f"must be > 0, got {self.adapter_points}"),
            ("case_reduction", self.case_reduction > 0 and self.embed_dim % self.case_reduction == 0,
             f"must divide embed_dim={self.embed_dim}, got {self.case_reduction}"),
            ("extractor_dim", self.extractor_dim > 0, f"must be > 0, got {self.extractor_dim}"),
            ("decoder_dim", self.decoder_dim > 0, f"must be > 0, got {self.decoder_dim}"),
            ("experts", len(self.experts) > 0
             and len(set(self.experts)) == len(self.experts)
             and all(e in {t.value for t in ExpertType} for e in self.experts),
             f"must be distinct values from 1..4, got {list(self.experts)}"),
            ("fusion", self.fusion in {m.value for m in FusionMode},
             f"must be one of {[m.value for m in FusionMode]}, got '{self.fusion}'"),
            ("lr", self.lr >= 0, f"must be >= 0, got {self.lr}"),
            ("iterations", self.iterations >= 0, f"must be >= 0, got {self.iterations}"),
            ("batch_size", self.batch_size > 0, f"must be > 0, got {self.batch_size}"),
            ("checkpoint_every", self.checkpoint_every > 0, f"must be > 0, got {self.checkpoint_every}"),
            ("log_every", self.log_every > 0, f"must be > 0, got {self.log_every}"),
            ("ablate", all(a in {x.value for x in Ablation} for a in self.ablate),
             f"must name known ablations {[x.value for x in Ablation]}, got {list(self.ablate)}"),
        ]

        for key, ok, message in checks:
            if not ok:
                raise ValueError(f"{key} {message}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["experts"] = list(self.experts)
        data["ablate"] = list(self.ablate)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"Unknown configuration keys: {unknown}")
        values = dict(data)
        for key in ("experts", "ablate"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


# ---------------- Dataset ---------------- #


@dataclass(frozen=True, slots=True)
class DatasetSpec:
    """Synthetic camouflage dataset description."""

    count: int = 200
    image_size: int = 64
    texture_seed: int = 7
    shape: str = ShapeFamily.ELLIPSE.value
    camouflage: float = 0.5
    image_format: str = ImageFormat.PNG.value

    def validate(self) -> None:
        if self.count <= 0:
            raise ValueError(f"count must be positive, got {self.count}")
        if self.image_size <= 0:
            raise ValueError(f"image_size must be positive, got {self.image_size}")
        if not 0.0 <= self.camouflage <= 1.0:
            raise ValueError(f"camouflage must lie in [0, 1], got {self.camouflage}")
        if self.shape not in {s.value for s in ShapeFamily}:
            raise ValueError(f"Unknown shape family '{self.shape}'")
        if self.image_format not in {f.value for f in ImageFormat}:
            raise ValueError(f"Unknown image format '{self.image_format}'")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


