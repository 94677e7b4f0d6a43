"""Critic construction and embedding inference.

A critic is a backbone with its classification head stripped, so the
forward pass yields the global-average-pooled penultimate feature. The
full profile wraps the torchvision ResNet/DenseNet variants; the toy
profile builds small seeded conv nets with the same roster and scaled
dims, which is what the test suite runs on CPU.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import NumericalError, WeightsUnavailable
from ..torchutil import parameter_hash, seeded_generator, seeded_init_, to_tensor
from .registry import CRITIC_IDS, CriticSpec, ZooProfile
from .store import WeightStore

# channel widths for the toy conv nets, varied per critic for diversity
_TOY_WIDTHS = {
    "resnet18": 8,
    "resnet34": 10,
    "resnet50": 12,
    "resnet101": 14,
    "resnet152": 16,
    "densenet121": 8,
    "densenet161": 12,
    "densenet169": 10,
    "densenet201": 14,
}


class ToyConvNet(nn.Module):
    """Two conv blocks, global average pooling, linear projection to dim."""

    def __init__(self, width: int, embedding_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(3, width, 3, padding=1)
        self.conv2 = nn.Conv2d(width, 2 * width, 3, padding=1)
        self.project = nn.Linear(2 * width, embedding_dim)

    def forward(self, x):
        x = F.max_pool2d(F.relu(self.conv1(x)), 2)
        x = F.max_pool2d(F.relu(self.conv2(x)), 2)
        x = x.mean(dim=(2, 3))
        return self.project(x)


class _DenseNetFeatures(nn.Module):
    """torchvision DenseNet trunk with pooled output and no classifier."""

    def __init__(self, densenet):
        super().__init__()
        self.features = densenet.features

    def forward(self, x):
        x = F.relu(self.features(x), inplace=True)
        x = F.adaptive_avg_pool2d(x, (1, 1))
        return torch.flatten(x, 1)


def build_backbone(critic_id: str, profile: ZooProfile, pretrained: bool = False) -> nn.Module:
    """Instantiate the head-stripped network for one critic.

    Toy profile ignores ``pretrained`` (its generic weights are a seeded
    init). Full profile with ``pretrained=True`` pulls the ImageNet
    checkpoint through torchvision, which needs either a local
    torchvision cache or network access.
    """
    if critic_id not in CRITIC_IDS:
        raise ValueError(f"unknown critic {critic_id!r}")
    if profile.name == "toy":
        net = ToyConvNet(_TOY_WIDTHS[critic_id], profile.dims[critic_id])
        seed_digest = hashlib.blake2b(
            critic_id.encode() + profile.init_seed.to_bytes(8, "little", signed=True),
            digest_size=8,
            person=b"dex-toy",
        ).digest()
        seeded_init_(net, seeded_generator(int.from_bytes(seed_digest, "little")))
        return net.eval()

    from torchvision import models as tv_models

    builder = getattr(tv_models, critic_id)
    try:
        weights = "IMAGENET1K_V1" if pretrained else None
        net = builder(weights=weights)
    except Exception as exc:
        raise WeightsUnavailable(
            f"cannot obtain pretrained weights for {critic_id}: {exc}"
        ) from exc
    if critic_id.startswith("resnet"):
        net.fc = nn.Identity()
        return net.eval()
    return _DenseNetFeatures(net).eval()


@dataclass
class Critic:
    """A loaded feature extractor plus the spec describing its weights."""

    spec: CriticSpec
    module: nn.Module
    profile: ZooProfile

    @property
    def critic_id(self) -> str:
        return self.spec.critic_id

    @property
    def embedding_dim(self) -> int:
        return self.spec.embedding_dim


class CriticZoo:
    """Builds critics for a profile and persists their weights."""

    def __init__(self, profile: ZooProfile, weights_dir=None):
        self.profile = profile
        self.store = WeightStore(weights_dir) if weights_dir is not None else None

    def _wrap(self, critic_id: str, module: nn.Module, state: str) -> Critic:
        spec = CriticSpec(
            critic_id=critic_id,
            embedding_dim=self.profile.dims[critic_id],
            weights_state=state,
            weights_hash=parameter_hash(module),
        )
        return Critic(spec=spec, module=module.eval(), profile=self.profile)

    def create(self, critic_id: str, state: str = "generic_pretrained") -> Critic:
        """Load a critic in the requested weights state.

        Stored weights win when present (and must pass the hash check);
        otherwise generic weights come from the profile's builder.
        Adapted weights exist only in the store.
        """
        if self.store is not None and self.store.has(critic_id, state):
            module = build_backbone(critic_id, self.profile, pretrained=False)
            self.store.load_into(critic_id, state, module)
            return self._wrap(critic_id, module, state)
        if state == "domain_adapted":
            raise WeightsUnavailable(
                f"no adapted weights stored for {critic_id}; run domain adaptation first"
            )
        module = build_backbone(critic_id, self.profile, pretrained=self.profile.name == "full")
        return self._wrap(critic_id, module, state)

    def save(self, critic: Critic) -> str:
        if self.store is None:
            raise WeightsUnavailable("zoo has no weights directory configured")
        return self.store.save(critic.critic_id, critic.spec.weights_state, critic.module)


def embed(critic: Critic, image: np.ndarray) -> np.ndarray:
    """Embed one preprocessed image; returns float32 of length embedding_dim."""
    return embed_batch(critic, image[None])[0]


def embed_batch(critic: Critic, images: np.ndarray) -> np.ndarray:
    if images.ndim != 4 or images.shape[1] != 3:
        raise ValueError(f"expected (batch, 3, H, W) input, got {images.shape}")
    critic.module.eval()
    with torch.no_grad():
        out = critic.module(to_tensor(images.astype(np.float32, copy=False)))
    vectors = out.numpy().astype(np.float32)
    if vectors.shape[1] != critic.embedding_dim:
        raise NumericalError(
            f"{critic.critic_id} produced dim {vectors.shape[1]}, "
            f"expected {critic.embedding_dim}"
        )
    if not np.all(np.isfinite(vectors)):
        raise NumericalError(f"{critic.critic_id} produced non-finite embedding values")
    return vectors
