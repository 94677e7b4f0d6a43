from .bundle import (
    Embedding,
    FusedFeature,
    ObservationBundle,
    assemble_bundle,
    chunk_for_recurrence,
    fuse_concatenated,
    fuse_parallel,
)
from .cache import CacheStore, FeatureCacheKey

__all__ = [
    "Embedding",
    "FusedFeature",
    "ObservationBundle",
    "assemble_bundle",
    "chunk_for_recurrence",
    "fuse_concatenated",
    "fuse_parallel",
    "CacheStore",
    "FeatureCacheKey",
]
