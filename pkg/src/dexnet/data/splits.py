"""Meta-split protocols: disjoint meta-train / meta-test class partitions.

Built-in protocols encode the benchmark conventions as class-name rules
(crop prefixes, plant vs pest domains) plus expected class counts, so
they apply to any manifest that follows the datasets' naming scheme.
Support/query pools are filled by a one-time seeded partition per class;
episodes later subsample within the pools, which makes query
contamination structurally impossible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import CannotPartition, IoError, ProtocolClassMissing, ProtocolError
from .manifest import DatasetManifest, ImageSample

PROTOCOLS = (
    "pv_tomato10",
    "pv_argueso6",
    "pnp_mixed",
    "pnp_cross1",
    "pnp_cross2",
    "potato_field",
    "cotton_field",
    "custom",
)

# Published query-pool size for the tomato subset; the partition records
# the delta between this and its own rounding so reports can flag it.
REFERENCE_QUERY_TOTALS = {"pv_tomato10": 3629}


@dataclass
class MetaSplit:
    protocol_id: str
    split_seed: int
    meta_train_classes: tuple[str, ...]
    meta_test_classes: tuple[str, ...]
    test_samples: dict[str, list[ImageSample]]
    support_pool: dict[str, list[ImageSample]] = field(default_factory=dict)
    query_pool: dict[str, list[ImageSample]] = field(default_factory=dict)
    support_ratio: float | None = None
    dataset_ids: tuple[str, ...] = ()

    @property
    def has_pools(self) -> bool:
        return bool(self.support_pool)

    def min_support_size(self) -> int:
        return min(len(v) for v in self.support_pool.values())

    def query_total(self) -> int:
        return sum(len(v) for v in self.query_pool.values())

    def reference_query_delta(self) -> dict | None:
        """Observed vs published query-pool size, where a published count exists."""
        ref = REFERENCE_QUERY_TOTALS.get(self.protocol_id)
        if ref is None or not self.has_pools:
            return None
        observed = self.query_total()
        return {"observed": observed, "reference": ref, "delta": observed - ref}


def _merged_class_map(manifests) -> dict[str, tuple[str, list[ImageSample]]]:
    """class -> (dataset_id, samples) across manifests; duplicate names are ambiguous."""
    merged: dict[str, tuple[str, list[ImageSample]]] = {}
    for m in manifests:
        for cls in m.classes:
            if cls in merged:
                raise ProtocolError(
                    f"class {cls!r} appears in both {merged[cls][0]!r} and {m.dataset_id!r}"
                )
            merged[cls] = (m.dataset_id, m.samples[cls])
    return merged


def _crop_prefix(class_name: str) -> str:
    """Leading crop token of a PlantVillage-style class name, lowercased."""
    head = class_name.split("___")[0].split("__")[0]
    for sep in ("_", "-", " ", ",", "("):
        head = head.split(sep)[0]
    return head.lower()


def _classes_by_crop(classes, crops) -> list[str]:
    wanted = {c.lower() for c in crops}
    return [c for c in classes if _crop_prefix(c) in wanted]


def _pnp_domains(manifests) -> tuple[list[str], list[str]]:
    """Split classes into (plants, pests) by manifest dataset_id."""
    plants, pests = [], []
    for m in manifests:
        name = m.dataset_id.lower()
        if "pest" in name:
            pests.extend(m.classes)
        elif "plant" in name:
            plants.extend(m.classes)
        else:
            raise ProtocolClassMissing(
                "plants-and-pests protocols need manifests whose dataset_id "
                f"names the domain ('plant'/'pest'); got {m.dataset_id!r}"
            )
    if not plants or not pests:
        raise ProtocolClassMissing("need both a plant and a pest manifest")
    return sorted(plants), sorted(pests)


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ProtocolClassMissing(message)


def build_meta_split(
    manifests,
    protocol_id: str,
    split_seed: int,
    meta_train: list[str] | None = None,
    meta_test: list[str] | None = None,
) -> MetaSplit:
    """Assign classes to meta-train / meta-test per the named protocol.

    Pools are left empty; call :func:`partition_support_query` next.
    ``custom`` takes explicit class lists and only checks disjointness
    and presence.
    """
    if isinstance(manifests, DatasetManifest):
        manifests = [manifests]
    if protocol_id not in PROTOCOLS:
        raise ProtocolError(f"unknown protocol {protocol_id!r}")
    merged = _merged_class_map(manifests)
    all_classes = sorted(merged)

    if protocol_id == "pv_tomato10":
        test = _classes_by_crop(all_classes, ["tomato"])
        train = [c for c in all_classes if c not in set(test)]
        _expect(len(test) == 10, f"expected 10 tomato classes, found {len(test)}")
        _expect(len(train) == 28, f"expected 28 non-tomato classes, found {len(train)}")
    elif protocol_id == "pv_argueso6":
        test = _classes_by_crop(all_classes, ["apple", "blueberry", "cherry"])
        train = [c for c in all_classes if c not in set(test)]
        _expect(
            len(test) == 6,
            f"expected 6 apple/blueberry/cherry classes, found {len(test)}",
        )
        _expect(len(train) >= 1, "no meta-train classes left")
    elif protocol_id in ("pnp_mixed", "pnp_cross1", "pnp_cross2"):
        plants, pests = _pnp_domains(manifests)
        _expect(len(plants) == 10, f"expected 10 plant classes, found {len(plants)}")
        _expect(len(pests) == 10, f"expected 10 pest classes, found {len(pests)}")
        if protocol_id == "pnp_mixed":
            train = sorted(plants[:5] + pests[:5])
            test = sorted(plants[5:] + pests[5:])
        elif protocol_id == "pnp_cross1":
            train, test = pests, plants
        else:
            train, test = plants, pests
    elif protocol_id in ("potato_field", "cotton_field"):
        # Field datasets are meta-test only; any extra manifests supply
        # the adaptation classes.
        crop = "potato" if protocol_id == "potato_field" else "cotton"
        field_manifests = [m for m in manifests if crop in m.dataset_id.lower()]
        _expect(
            len(field_manifests) == 1,
            f"expected exactly one manifest whose dataset_id contains {crop!r}",
        )
        test = sorted(field_manifests[0].classes)
        train = [c for c in all_classes if c not in set(test)]
        _expect(len(test) >= 2, "field dataset needs at least 2 classes")
    else:  # custom
        if meta_train is None or meta_test is None:
            raise ProtocolError("custom protocol requires meta_train and meta_test lists")
        train, test = sorted(meta_train), sorted(meta_test)
        overlap = set(train) & set(test)
        if overlap:
            raise ProtocolClassMissing(
                f"meta-train and meta-test overlap: {sorted(overlap)}"
            )
        missing = [c for c in train + test if c not in merged]
        _expect(not missing, f"classes not found in manifests: {missing}")

    assert not set(train) & set(test)
    return MetaSplit(
        protocol_id=protocol_id,
        split_seed=split_seed,
        meta_train_classes=tuple(train),
        meta_test_classes=tuple(test),
        test_samples={c: list(merged[c][1]) for c in test},
        dataset_ids=tuple(m.dataset_id for m in manifests),
    )


def _round_half_up(x: Fraction) -> int:
    return int(x + Fraction(1, 2))


def _class_rng(split_seed: int, class_name: str) -> np.random.Generator:
    digest = hashlib.blake2b(
        class_name.encode("utf-8") + split_seed.to_bytes(8, "little", signed=True),
        digest_size=8,
        person=b"dex-part",
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def partition_support_query(
    split: MetaSplit, ratio: float | Fraction, split_seed: int
) -> MetaSplit:
    """Fill support/query pools with a seeded per-class partition.

    Query count is round-half-up of ``total * (1 - ratio)``, clamped so
    both sides keep at least one sample; the remainder goes to support.
    The partition is disjoint, exhaustive, and deterministic in
    ``split_seed``.
    """
    if split.has_pools:
        raise ProtocolError("pools already filled for this split")
    frac = ratio if isinstance(ratio, Fraction) else Fraction(str(ratio))
    if not 0 < frac < 1:
        raise ProtocolError(f"ratio must lie in (0, 1), got {ratio}")

    support_pool: dict[str, list[ImageSample]] = {}
    query_pool: dict[str, list[ImageSample]] = {}
    for cls, samples in split.test_samples.items():
        total = len(samples)
        if total < 2:
            raise CannotPartition(f"class {cls!r} has {total} sample(s); need at least 2")
        q_count = _round_half_up(total * (1 - frac))
        q_count = min(max(q_count, 1), total - 1)
        ordered = sorted(samples, key=lambda s: s.sample_id)
        perm = _class_rng(split_seed, cls).permutation(total)
        shuffled = [ordered[i] for i in perm]
        support_pool[cls] = shuffled[: total - q_count]
        query_pool[cls] = shuffled[total - q_count :]

    return MetaSplit(
        protocol_id=split.protocol_id,
        split_seed=split_seed,
        meta_train_classes=split.meta_train_classes,
        meta_test_classes=split.meta_test_classes,
        test_samples=split.test_samples,
        support_pool=support_pool,
        query_pool=query_pool,
        support_ratio=float(frac),
        dataset_ids=split.dataset_ids,
    )


def save_meta_split(split: MetaSplit, path) -> None:
    doc = {
        "protocol_id": split.protocol_id,
        "split_seed": split.split_seed,
        "support_ratio": split.support_ratio,
        "dataset_ids": list(split.dataset_ids),
        "meta_train_classes": list(split.meta_train_classes),
        "meta_test_classes": list(split.meta_test_classes),
        "support_pool": {c: [s.sample_id for s in v] for c, v in split.support_pool.items()},
        "query_pool": {c: [s.sample_id for s in v] for c, v in split.query_pool.items()},
    }
    delta = split.reference_query_delta()
    if delta is not None:
        doc["reference_query_delta"] = delta
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write meta-split to {path}: {exc}") from exc
