"""Critic roster: the nine backbone feature extractors and their dims.

The canonical order below is load-bearing: fusion concatenates in this
order and every bundle and report echoes it. A "toy" profile scales every
dimension down by a common factor for desk-scale runs; 32 divides all
nine dims exactly, giving a fused length of 437.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

CRITIC_IDS = (
    "resnet18",
    "resnet34",
    "resnet50",
    "resnet101",
    "resnet152",
    "densenet121",
    "densenet161",
    "densenet169",
    "densenet201",
)

EMBEDDING_DIMS = MappingProxyType(
    {
        "resnet18": 512,
        "resnet34": 512,
        "resnet50": 2048,
        "resnet101": 2048,
        "resnet152": 2048,
        "densenet121": 1024,
        "densenet161": 2208,
        "densenet169": 1664,
        "densenet201": 1920,
    }
)

FUSED_DIM = 13_984
MAX_EMBEDDING_DIM = 2208
DEFAULT_CHUNK_LEN = 874  # 16 timesteps of the fused vector

TOY_SCALE = 32
TOY_FUSED_DIM = FUSED_DIM // TOY_SCALE  # 437

assert sum(EMBEDDING_DIMS.values()) == FUSED_DIM
assert all(d % TOY_SCALE == 0 for d in EMBEDDING_DIMS.values())

RESNET_IDS = tuple(c for c in CRITIC_IDS if c.startswith("resnet"))
DENSENET_IDS = tuple(c for c in CRITIC_IDS if c.startswith("densenet"))

CRITIC_SET_ALIASES = {
    "all": CRITIC_IDS,
    "all_nine": CRITIC_IDS,
    "resnets": RESNET_IDS,
    "densenets": DENSENET_IDS,
}

WEIGHTS_STATES = ("generic_pretrained", "domain_adapted")


@dataclass(frozen=True)
class CriticSpec:
    critic_id: str
    embedding_dim: int
    weights_state: str
    weights_hash: str

    def __post_init__(self):
        if self.critic_id not in CRITIC_IDS:
            raise ValueError(f"unknown critic {self.critic_id!r}")
        if self.weights_state not in WEIGHTS_STATES:
            raise ValueError(f"unknown weights state {self.weights_state!r}")


@dataclass(frozen=True)
class ZooProfile:
    """Which physical networks realize the nine critics.

    ``full`` uses the real ImageNet-pretrained backbones at 224x224;
    ``toy`` uses small seeded conv nets whose dims are the real table
    divided by ``TOY_SCALE``, sized for CPU test runs.
    """

    name: str
    image_size: int
    dims: MappingProxyType
    init_seed: int = 0

    @property
    def fused_dim(self) -> int:
        return sum(self.dims.values())

    @property
    def max_dim(self) -> int:
        return max(self.dims.values())

    def subset_dim(self, critic_ids) -> int:
        return sum(self.dims[c] for c in critic_ids)


FULL_PROFILE = ZooProfile(name="full", image_size=224, dims=EMBEDDING_DIMS)


def toy_profile(init_seed: int = 0, image_size: int = 32) -> ZooProfile:
    dims = MappingProxyType({c: d // TOY_SCALE for c, d in EMBEDDING_DIMS.items()})
    return ZooProfile(name="toy", image_size=image_size, dims=dims, init_seed=init_seed)


def resolve_critic_set(value) -> tuple[str, ...]:
    """Expand an alias or validate an explicit critic list, canonical order."""
    if isinstance(value, str):
        if value in CRITIC_SET_ALIASES:
            return CRITIC_SET_ALIASES[value]
        value = [v.strip() for v in value.split(",") if v.strip()]
    chosen = set(value)
    unknown = chosen - set(CRITIC_IDS)
    if unknown:
        raise ValueError(f"unknown critics: {sorted(unknown)}")
    if not chosen:
        raise ValueError("critic set is empty")
    return tuple(c for c in CRITIC_IDS if c in chosen)
