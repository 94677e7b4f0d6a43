"""Dataset ingestion: scan a class-per-directory image tree into a manifest.

Expected layout: ``<root>/<class_name>/<image files>`` with JPEG or PNG
files. The manifest is the immutable inventory every later stage works
from; classes are kept in lexicographic order so label indices are
reproducible without a side-channel file.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from ..errors import ClassEmpty, IoError, NoClassesFound

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")


def content_digest(data: bytes) -> str:
    """64-bit digest of file bytes, as 16 hex characters."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass(frozen=True)
class ImageSample:
    """One image file: id is its path relative to the dataset root."""

    sample_id: str
    class_label: str
    dataset_id: str
    content_hash: str


@dataclass
class DatasetManifest:
    dataset_id: str
    root: Path
    classes: tuple[str, ...]
    samples: dict[str, list[ImageSample]]
    created_at: str
    skipped: list[dict] = field(default_factory=list)

    @property
    def total_samples(self) -> int:
        return sum(len(v) for v in self.samples.values())

    def sample_path(self, sample: ImageSample) -> Path:
        return self.root / sample.sample_id

    def restricted_to(self, classes) -> "DatasetManifest":
        """A view of this manifest containing only the given classes."""
        keep = sorted(set(classes))
        missing = [c for c in keep if c not in self.samples]
        if missing:
            raise KeyError(f"classes not in manifest {self.dataset_id}: {missing}")
        return DatasetManifest(
            dataset_id=self.dataset_id,
            root=self.root,
            classes=tuple(keep),
            samples={c: list(self.samples[c]) for c in keep},
            created_at=self.created_at,
        )

    def to_dict(self) -> dict:
        doc = {
            "dataset_id": self.dataset_id,
            "root": str(self.root),
            "classes": list(self.classes),
            "samples": [
                {"id": s.sample_id, "class": s.class_label, "hash": s.content_hash}
                for c in self.classes
                for s in self.samples[c]
            ],
            "created_at": self.created_at,
        }
        if self.skipped:
            doc["skipped"] = self.skipped
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetManifest":
        dataset_id = doc["dataset_id"]
        classes = tuple(doc["classes"])
        samples: dict[str, list[ImageSample]] = {c: [] for c in classes}
        for rec in doc["samples"]:
            samples[rec["class"]].append(
                ImageSample(rec["id"], rec["class"], dataset_id, rec["hash"])
            )
        return cls(
            dataset_id=dataset_id,
            root=Path(doc["root"]),
            classes=classes,
            samples=samples,
            created_at=doc["created_at"],
            skipped=list(doc.get("skipped", [])),
        )


def scan_dataset(root_path: Path | str, dataset_id: str) -> DatasetManifest:
    """Scan ``root_path`` and build a manifest.

    Unreadable image files are recorded in the manifest's skip report
    rather than aborting the scan. Repeated scans of an unchanged tree
    produce identical manifests apart from ``created_at``.
    """
    root = Path(root_path)
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir()) if root.is_dir() else []
    if not class_dirs:
        raise NoClassesFound(f"no class directories under {root}")

    samples: dict[str, list[ImageSample]] = {}
    skipped: list[dict] = []
    for class_dir in class_dirs:
        label = class_dir.name
        class_samples = []
        for path in sorted(class_dir.iterdir()):
            if not path.is_file() or path.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            try:
                data = path.read_bytes()
                with Image.open(path) as img:
                    img.verify()
            except Exception as exc:
                skipped.append(
                    {"path": str(path.relative_to(root)), "reason": str(exc)}
                )
                continue
            class_samples.append(
                ImageSample(
                    sample_id=path.relative_to(root).as_posix(),
                    class_label=label,
                    dataset_id=dataset_id,
                    content_hash=content_digest(data),
                )
            )
        if not class_samples:
            raise ClassEmpty(f"no readable images in class directory {class_dir}")
        samples[label] = class_samples

    return DatasetManifest(
        dataset_id=dataset_id,
        root=root,
        classes=tuple(sorted(samples)),
        samples=samples,
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        skipped=skipped,
    )


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoError(f"cannot write manifest to {path}: {exc}") from exc


def load_manifest(path: Path | str) -> DatasetManifest:
    with open(path, encoding="utf-8") as fh:
        return DatasetManifest.from_dict(json.load(fh))
