from .adapt import AdaptationConfig, EpochRecord, TrainingLog, domain_adapt
from .models import Critic, CriticZoo, ToyConvNet, build_backbone, embed, embed_batch
from .preprocess import CHANNEL_MEAN, CHANNEL_STD, preprocess
from .registry import (
    CRITIC_IDS,
    CRITIC_SET_ALIASES,
    DEFAULT_CHUNK_LEN,
    DENSENET_IDS,
    EMBEDDING_DIMS,
    FULL_PROFILE,
    FUSED_DIM,
    MAX_EMBEDDING_DIM,
    RESNET_IDS,
    TOY_FUSED_DIM,
    TOY_SCALE,
    CriticSpec,
    ZooProfile,
    resolve_critic_set,
    toy_profile,
)
from .store import WeightStore

__all__ = [
    "AdaptationConfig",
    "EpochRecord",
    "TrainingLog",
    "domain_adapt",
    "Critic",
    "CriticZoo",
    "ToyConvNet",
    "build_backbone",
    "embed",
    "embed_batch",
    "CHANNEL_MEAN",
    "CHANNEL_STD",
    "preprocess",
    "CRITIC_IDS",
    "CRITIC_SET_ALIASES",
    "DEFAULT_CHUNK_LEN",
    "DENSENET_IDS",
    "EMBEDDING_DIMS",
    "FULL_PROFILE",
    "FUSED_DIM",
    "MAX_EMBEDDING_DIM",
    "RESNET_IDS",
    "TOY_FUSED_DIM",
    "TOY_SCALE",
    "CriticSpec",
    "ZooProfile",
    "resolve_critic_set",
    "toy_profile",
    "WeightStore",
]
