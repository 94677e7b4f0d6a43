"""Assembling per-critic embeddings into classifier inputs.

Two fusion modes exist. Concatenated joins the roster's vectors end to
end in canonical critic order (13,984 dims for the full nine-critic
roster). Parallel keeps them as a sequence, one timestep per critic,
each right-padded with zeros to the widest dim so the classifier sees a
rectangular input. A concatenated vector can additionally be chunked
into equal slices to feed recurrent heads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ChunkError, DimensionError, IncompleteBundle
from ..critics.registry import CRITIC_IDS


@dataclass(frozen=True)
class Embedding:
    critic_id: str
    weights_hash: str
    sample_id: str
    vector: np.ndarray

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vector, dtype=np.float32)
        if vec.ndim != 1:
            raise DimensionError(f"embedding must be 1-D, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise DimensionError(f"embedding for {self.sample_id!r} has non-finite values")
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class ObservationBundle:
    """Ordered embeddings of one image, one entry per roster critic."""

    sample_id: str
    embeddings: tuple[Embedding, ...]

    def __post_init__(self):
        ids = [e.critic_id for e in self.embeddings]
        expected = [c for c in CRITIC_IDS if c in set(ids)]
        if ids != expected or len(set(ids)) != len(ids):
            raise IncompleteBundle(
                [f"order violation: got {ids}, canonical is {expected}"]
            )
        off = [e.sample_id for e in self.embeddings if e.sample_id != self.sample_id]
        if off:
            raise DimensionError(f"bundle mixes sample ids: {off}")

    @property
    def critic_ids(self) -> tuple[str, ...]:
        return tuple(e.critic_id for e in self.embeddings)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(e.dim for e in self.embeddings)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)


@dataclass(frozen=True)
class FusedFeature:
    sample_id: str
    mode: str  # "concatenated" | "parallel"
    layout: tuple[tuple[str, int], ...]  # (critic_id, dim) in fusion order
    vector: np.ndarray | None = None  # concatenated mode
    sequence: np.ndarray | None = None  # parallel mode, (steps, pad_dim)

    @property
    def flat_dim(self) -> int:
        if self.mode == "concatenated":
            return int(self.vector.shape[0])
        return int(self.sequence.size)

    def slice_of(self, critic_id: str) -> np.ndarray:
        """Recover one critic's vector from a concatenated feature."""
        if self.mode != "concatenated":
            raise DimensionError("slice_of applies to concatenated features only")
        offset = 0
        for cid, dim in self.layout:
            if cid == critic_id:
                return self.vector[offset : offset + dim]
            offset += dim
        raise KeyError(critic_id)


def assemble_bundle(
    sample_id: str, cache, generation, dataset_id: str, roster=CRITIC_IDS
) -> ObservationBundle:
    """Fetch one embedding per roster critic from the cache.

    ``generation`` maps critic_id to the weights hash the campaign is
    running under; an embedding from any other generation is simply not
    found. All absentees are reported in one IncompleteBundle error.
    """
    from .cache import FeatureCacheKey

    embeddings, missing = [], []
    for critic_id in roster:
        key = FeatureCacheKey(
            critic_id=critic_id,
            weights_hash=generation[critic_id],
            dataset_id=dataset_id,
            sample_id=sample_id,
        )
        vector = cache.get(key)
        if vector is None:
            missing.append(critic_id)
        else:
            embeddings.append(
                Embedding(
                    critic_id=critic_id,
                    weights_hash=generation[critic_id],
                    sample_id=sample_id,
                    vector=vector,
                )
            )
    if missing:
        raise IncompleteBundle(missing)
    return ObservationBundle(sample_id=sample_id, embeddings=tuple(embeddings))


def fuse_concatenated(bundle: ObservationBundle) -> FusedFeature:
    """Join the bundle's vectors end to end, canonical order."""
    vector = np.concatenate([e.vector for e in bundle.embeddings])
    return FusedFeature(
        sample_id=bundle.sample_id,
        mode="concatenated",
        layout=tuple(zip(bundle.critic_ids, bundle.dims)),
        vector=np.ascontiguousarray(vector, dtype=np.float32),
    )


def fuse_parallel(bundle: ObservationBundle, pad_dim: int | None = None) -> FusedFeature:
    """One timestep per critic, each zero-padded on the right to ``pad_dim``."""
    if pad_dim is None:
        pad_dim = max(bundle.dims)
    if pad_dim < max(bundle.dims):
        raise DimensionError(
            f"pad_dim {pad_dim} smaller than widest embedding {max(bundle.dims)}"
        )
    seq = np.zeros((len(bundle.embeddings), pad_dim), dtype=np.float32)
    for i, emb in enumerate(bundle.embeddings):
        seq[i, : emb.dim] = emb.vector
    return FusedFeature(
        sample_id=bundle.sample_id,
        mode="parallel",
        layout=tuple(zip(bundle.critic_ids, bundle.dims)),
        sequence=seq,
    )


def chunk_for_recurrence(fused: FusedFeature, chunk_len: int) -> np.ndarray:
    """Reshape a concatenated feature into (timesteps, chunk_len).

    Order is preserved, so flattening the result reproduces the fused
    vector exactly. ``chunk_len`` must divide the vector length.
    """
    if fused.mode != "concatenated":
        raise ChunkError("chunking applies to concatenated features only")
    total = fused.vector.shape[0]
    if chunk_len < 1 or total % chunk_len != 0:
        raise ChunkError(f"chunk_len {chunk_len} does not divide feature length {total}")
    return fused.vector.reshape(total // chunk_len, chunk_len)
