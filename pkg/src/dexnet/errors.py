"""Exception hierarchy shared across the pipeline.

Three families matter to callers: configuration problems (bad flags or
option combinations), data problems (datasets, weights, caches), and a
campaign that produced too many failed tasks to be trustworthy. The CLI
maps these to exit codes 2, 3 and 4 respectively.
"""


class DexnetError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DexnetError):
    """Invalid configuration value or combination."""


class ChunkError(ConfigError):
    """Chunk length does not evenly divide the fused feature length."""


class DataError(DexnetError):
    """Base class for dataset, weight, and cache problems."""


class NoClassesFound(DataError):
    """Dataset root contains no class subdirectories."""


class ClassEmpty(DataError):
    """A class directory contains no readable images."""


class ProtocolError(DataError):
    """A meta-split protocol cannot be applied to the supplied manifests."""


class ProtocolClassMissing(ProtocolError):
    """Protocol references classes the manifests do not provide."""


class CannotPartition(DataError):
    """Class has too few samples to split into support and query pools."""


class InsufficientSupport(DataError):
    """Requested k exceeds a class's support pool."""


class InsufficientQuery(DataError):
    """Requested query count exceeds a class's query pool."""


class DecodeError(DataError):
    """Image bytes could not be decoded."""


class WeightsUnavailable(DataError):
    """Critic weights are missing, unfetchable, or fail their hash check."""


class LeakageError(DataError):
    """Adaptation source classes overlap the meta-test classes."""


class TrainingDiverged(DataError):
    """Loss became non-finite during training."""


class NumericalError(DataError):
    """A computation produced non-finite values."""


class DimensionError(DataError):
    """Vector length does not match the expected embedding dimension."""


class CacheCorrupt(DataError):
    """A cache record failed its checksum."""


class IncompleteBundle(DataError):
    """Embeddings for one or more critics are missing from the cache."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"missing embeddings for critics: {', '.join(self.missing)}")


class LabelError(DataError):
    """A training label lies outside [0, N)."""


class EmptyQuery(DataError):
    """Task evaluation received an empty query set."""


class EmptyAggregate(DataError):
    """Aggregation received an empty accuracy list."""


class IoError(DataError):
    """A report or result file could not be written."""


class CampaignFailed(DexnetError):
    """More than the tolerated fraction of tasks failed."""
