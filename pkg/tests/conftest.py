import numpy as np
import pytest

from dpmformer import DPMformer, ModelConfig, UNetConfig
from dpmformer.data import RainParams, synthesize_rain, synthetic_clean_image
from dpmformer.tensor import Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_tensor(rng, shape, dtype=np.float32, requires_grad=False, scale=1.0):
    return Tensor((rng.standard_normal(shape) * scale).astype(dtype), requires_grad=requires_grad)


def tiny_model_config(**overrides) -> ModelConfig:
    base = dict(unet=UNetConfig(base_channels=4, blocks_per_level=(1, 1, 1)))
    base.update(overrides)
    return ModelConfig(**base)


def zero_for_identity(model: DPMformer):
    """Zero every parameter except the MDTA temperatures (kept at 1 so
    the 0/alpha logits stay finite); the residual becomes exactly zero."""
    for name, p in model.named_parameters():
        p.data[...] = 1.0 if name.endswith("alpha") else 0.0


def fixture_pairs(count=4, size=64, seed=100):
    pairs = []
    for i in range(count):
        clean = synthetic_clean_image(i, size=size)
        pairs.append(synthesize_rain(clean, RainParams(seed=seed + i), pair_id=f"p{i}"))
    return pairs
