from .episodes import FULL_QUERY, Episode, EpisodeSpec, sample_episode, task_rng, task_seed
from .manifest import (
    DatasetManifest,
    ImageSample,
    content_digest,
    load_manifest,
    save_manifest,
    scan_dataset,
)
from .splits import (
    PROTOCOLS,
    REFERENCE_QUERY_TOTALS,
    MetaSplit,
    build_meta_split,
    partition_support_query,
    save_meta_split,
)

__all__ = [
    "FULL_QUERY",
    "Episode",
    "EpisodeSpec",
    "sample_episode",
    "task_rng",
    "task_seed",
    "DatasetManifest",
    "ImageSample",
    "content_digest",
    "load_manifest",
    "save_manifest",
    "scan_dataset",
    "PROTOCOLS",
    "REFERENCE_QUERY_TOTALS",
    "MetaSplit",
    "build_meta_split",
    "partition_support_query",
    "save_meta_split",
]
