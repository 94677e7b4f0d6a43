"""Domain adaptation: fine-tune a critic on meta-train classes.

A temporary classification head is attached, the network is fine-tuned
on the source classes (which must be disjoint from the meta-test
classes), and the head is discarded. The embedding dimension never
changes; only the weights state and hash do.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
import torch
from torch import nn

from ..data.manifest import DatasetManifest
from ..errors import ConfigError, IoError, LeakageError, TrainingDiverged
from ..torchutil import parameter_hash, seeded_generator, seeded_init_, to_tensor
from .models import Critic
from .preprocess import preprocess

# Preload decoded tensors when the whole source set fits comfortably in
# memory; above this many pixels, decode per batch instead.
_EAGER_PIXEL_BUDGET = 64_000_000


@dataclass(frozen=True)
class AdaptationConfig:
    source_classes: tuple[str, ...] = ()
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    optimizer_id: str = "adam"
    train_fraction_frozen: str = "none"  # "none" trains everything, "backbone" only the head
    val_fraction: float = 0.1
    early_stop_patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("adaptation epochs must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("adaptation learning rate must be positive")
        if self.train_fraction_frozen not in ("none", "backbone"):
            raise ConfigError(
                f"train_fraction_frozen must be 'none' or 'backbone', "
                f"got {self.train_fraction_frozen!r}"
            )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainingLog:
    records: list[EpochRecord] = field(default_factory=list)
    wall_clock_s: float = 0.0
    final_weights_hash: str = ""

    def save_jsonl(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                for rec in self.records:
                    fh.write(
                        json.dumps(
                            {
                                "epoch": rec.epoch,
                                "train_loss": rec.train_loss,
                                "train_accuracy": rec.train_accuracy,
                                "val_accuracy": rec.val_accuracy,
                                "wall_clock_s": self.wall_clock_s,
                                "final_weights_hash": self.final_weights_hash,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
        except OSError as exc:
            raise IoError(f"cannot write training log to {path}: {exc}") from exc


class _ImageSet:
    """Loads and preprocesses manifest images, eagerly when small."""

    def __init__(self, manifest: DatasetManifest, classes, image_size: int):
        self.image_size = image_size
        self.paths = []
        self.labels = []
        for label, cls in enumerate(classes):
            for sample in manifest.samples[cls]:
                self.paths.append(manifest.sample_path(sample))
                self.labels.append(label)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self._eager = None
        if len(self.paths) * image_size * image_size <= _EAGER_PIXEL_BUDGET:
            self._eager = np.stack([self._load(i) for i in range(len(self.paths))])

    def __len__(self):
        return len(self.paths)

    def _load(self, i: int) -> np.ndarray:
        return preprocess(self.paths[i].read_bytes(), image_size=self.image_size)

    def batch(self, indices) -> tuple[torch.Tensor, torch.Tensor]:
        if self._eager is not None:
            images = self._eager[indices]
        else:
            images = np.stack([self._load(i) for i in indices])
        return to_tensor(images), torch.from_numpy(self.labels[indices])


def domain_adapt(
    critic: Critic,
    manifest: DatasetManifest,
    config: AdaptationConfig,
    meta_test_classes=(),
) -> tuple[Critic, TrainingLog]:
    """Fine-tune ``critic`` on the manifest's classes; returns a new critic.

    Raises :class:`LeakageError` if any source class appears in
    ``meta_test_classes`` — adaptation must never see target classes.
    """
    source_classes = tuple(config.source_classes) or tuple(manifest.classes)
    leaked = set(source_classes) & set(meta_test_classes)
    if leaked:
        raise LeakageError(f"source classes overlap meta-test classes: {sorted(leaked)}")
    missing = set(source_classes) - set(manifest.classes)
    if missing:
        raise LeakageError(f"source classes missing from manifest: {sorted(missing)}")
    if critic.spec.weights_state != "generic_pretrained":
        raise ConfigError("critic must be in generic_pretrained state before adaptation")

    started = time.monotonic()
    classes = tuple(sorted(source_classes))
    data = _ImageSet(manifest.restricted_to(classes), classes, critic.profile.image_size)
    gen = seeded_generator(config.seed)
    backbone = copy.deepcopy(critic.module)  # adaptation works on a private copy

    # seeded 90/10 style train/val split of the source data
    order = torch.randperm(len(data), generator=gen).numpy()
    n_val = max(1, int(round(len(data) * config.val_fraction))) if len(data) > 1 else 0
    val_idx, train_idx = order[:n_val], order[n_val:]

    head = nn.Linear(critic.embedding_dim, len(classes))
    seeded_init_(head, gen)
    network = nn.Sequential(backbone, head)
    network.train()
    if config.train_fraction_frozen == "backbone":
        for p in backbone.parameters():
            p.requires_grad_(False)
    trainable = [p for p in network.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(trainable, lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    log = TrainingLog()
    best_val, stall = -1.0, 0
    for epoch in range(config.epochs):
        perm = torch.randperm(len(train_idx), generator=gen).numpy()
        epoch_losses, correct = [], 0
        for start in range(0, len(train_idx), config.batch_size):
            batch_idx = train_idx[perm[start : start + config.batch_size]]
            images, labels = data.batch(batch_idx)
            optimizer.zero_grad()
            logits = network(images)
            loss = loss_fn(logits, labels)
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became non-finite at epoch {epoch} for {critic.critic_id}"
                )
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss))
            correct += int((logits.argmax(dim=1) == labels).sum())
        val_acc = _evaluate(network, data, val_idx, config.batch_size) if n_val else float("nan")
        log.records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(epoch_losses)) if epoch_losses else float("nan"),
                train_accuracy=correct / max(1, len(train_idx)),
                val_accuracy=val_acc,
            )
        )
        if n_val and config.early_stop_patience > 0:
            if val_acc > best_val:
                best_val, stall = val_acc, 0
            else:
                stall += 1
                if stall >= config.early_stop_patience:
                    break

    network.eval()
    for p in backbone.parameters():
        p.requires_grad_(True)

    adapted_spec = replace(
        critic.spec,
        weights_state="domain_adapted",
        weights_hash=parameter_hash(backbone),
    )
    adapted = Critic(spec=adapted_spec, module=backbone, profile=critic.profile)
    log.wall_clock_s = time.monotonic() - started
    log.final_weights_hash = adapted_spec.weights_hash
    return adapted, log


@torch.no_grad()
def _evaluate(network, data: _ImageSet, indices, batch_size: int) -> float:
    network.eval()
    correct = 0
    for start in range(0, len(indices), batch_size):
        images, labels = data.batch(indices[start : start + batch_size])
        correct += int((network(images).argmax(dim=1) == labels).sum())
    network.train()
    return correct / max(1, len(indices))
