from __future__ import annotations

import numpy as np
import pytest

from priortune.core.data import SegmentationDataset, gen_synthetic_dataset
from priortune.core.models import DatasetSpec, TrainConfig


def tiny_config(**overrides) -> TrainConfig:
    """Smallest geometry that still exercises every component."""
    base = TrainConfig(
        image_size=32,
        embed_dim=16,
        depth=4,
        num_heads=2,
        extractor_dim=4,
        adapter_heads=2,
        adapter_points=2,
        case_reduction=4,
        decoder_dim=4,
        stages=4,
        iterations=3,
        batch_size=2,
        checkpoint_every=2,
        log_every=1,
    )
    return base.with_overrides(**overrides) if overrides else base


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def config() -> TrainConfig:
    return tiny_config()


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_data")
    gen_synthetic_dataset(DatasetSpec(count=4, image_size=32, texture_seed=3), root)
    return root


@pytest.fixture
def dataset(dataset_dir) -> SegmentationDataset:
    return SegmentationDataset(dataset_dir)
