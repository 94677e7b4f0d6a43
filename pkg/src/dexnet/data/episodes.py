"""Deterministic N-way k-shot task sampling from a partitioned meta-split.

Each task draws its RNG stream from a hash of (campaign_seed, task_index)
only, so tasks can be sampled in any order, or in parallel, without
changing their contents.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InsufficientQuery, InsufficientSupport
from .manifest import ImageSample
from .splits import MetaSplit

FULL_QUERY = "full"


@dataclass(frozen=True)
class EpisodeSpec:
    n_ways: int
    k_shots: int
    queries_per_class: int | str
    task_count: int
    campaign_seed: int

    def __post_init__(self):
        if self.n_ways < 2:
            raise ConfigError("n_ways must be at least 2")
        if self.k_shots < 1:
            raise ConfigError("k_shots must be positive")
        if self.task_count < 1:
            raise ConfigError("task_count must be positive")
        q = self.queries_per_class
        if q != FULL_QUERY and (not isinstance(q, int) or q < 1):
            raise ConfigError(
                f"queries_per_class must be a positive int or {FULL_QUERY!r}, got {q!r}"
            )


@dataclass(frozen=True)
class Episode:
    task_index: int
    classes: tuple[str, ...]
    support: tuple[tuple[ImageSample, int], ...]
    query: tuple[tuple[ImageSample, int], ...]


def task_rng(campaign_seed: int, task_index: int, purpose: bytes = b"episode") -> np.random.Generator:
    """RNG stream derived solely from (campaign_seed, task_index)."""
    payload = campaign_seed.to_bytes(8, "little", signed=True) + task_index.to_bytes(
        8, "little", signed=True
    )
    digest = hashlib.blake2b(payload, digest_size=8, person=purpose[:16]).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def task_seed(campaign_seed: int, task_index: int, purpose: bytes) -> int:
    payload = campaign_seed.to_bytes(8, "little", signed=True) + task_index.to_bytes(
        8, "little", signed=True
    )
    digest = hashlib.blake2b(payload, digest_size=8, person=purpose[:16]).digest()
    return int.from_bytes(digest, "little") % (2**63)


def _draw(rng: np.random.Generator, pool: list[ImageSample], count: int) -> list[ImageSample]:
    ordered = sorted(pool, key=lambda s: s.sample_id)
    idx = rng.choice(len(ordered), size=count, replace=False)
    return [ordered[i] for i in idx]


def sample_episode(split: MetaSplit, spec: EpisodeSpec, task_index: int) -> Episode:
    """Sample task ``task_index`` of the campaign described by ``spec``.

    Support draws k samples per class without replacement from the
    support pool; the query set draws Q per class from the query pool,
    or takes the whole pool when ``queries_per_class`` is ``"full"``.
    """
    if not split.has_pools:
        raise ConfigError("meta-split pools are empty; run partition_support_query first")
    if not 0 <= task_index < spec.task_count:
        raise ConfigError(
            f"task_index {task_index} outside [0, {spec.task_count})"
        )
    available = split.meta_test_classes
    if spec.n_ways > len(available):
        raise ConfigError(
            f"n_ways={spec.n_ways} exceeds the {len(available)} meta-test classes"
        )

    rng = task_rng(spec.campaign_seed, task_index)
    if spec.n_ways == len(available):
        classes = list(available)
    else:
        picked = rng.choice(len(available), size=spec.n_ways, replace=False)
        classes = [available[i] for i in picked]
    classes = sorted(classes)  # canonical ordering defines label indices

    support: list[tuple[ImageSample, int]] = []
    query: list[tuple[ImageSample, int]] = []
    for label, cls in enumerate(classes):
        s_pool = split.support_pool[cls]
        q_pool = split.query_pool[cls]
        if spec.k_shots > len(s_pool):
            raise InsufficientSupport(
                f"k={spec.k_shots} exceeds support pool of {cls!r} ({len(s_pool)})"
            )
        support.extend((s, label) for s in _draw(rng, s_pool, spec.k_shots))
        if spec.queries_per_class == FULL_QUERY:
            query.extend((s, label) for s in sorted(q_pool, key=lambda s: s.sample_id))
        else:
            if spec.queries_per_class > len(q_pool):
                raise InsufficientQuery(
                    f"Q={spec.queries_per_class} exceeds query pool of {cls!r} "
                    f"({len(q_pool)})"
                )
            query.extend((s, label) for s in _draw(rng, q_pool, spec.queries_per_class))

    return Episode(
        task_index=task_index,
        classes=tuple(classes),
        support=tuple(support),
        query=tuple(query),
    )
