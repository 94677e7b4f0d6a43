"""The five small classifier heads and their few-shot training loop.

Heads are trained from scratch on each task's support set. Dense heads
consume a flat feature vector; recurrent heads (LSTM/GRU and their
bidirectional variants) read a sequence — either the parallel
per-critic observations or a concatenated vector chunked into equal
timesteps — and classify from the concatenation of the final hidden
states of each direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..critics.registry import DEFAULT_CHUNK_LEN, FUSED_DIM, MAX_EMBEDDING_DIM
from ..errors import (
    ConfigError,
    DimensionError,
    EmptyQuery,
    LabelError,
    TrainingDiverged,
)
from ..fusion.bundle import FusedFeature, chunk_for_recurrence
from ..torchutil import parameter_count, parameter_hash, seeded_generator, seeded_init_, to_tensor

HEAD_KINDS = ("dense", "lstm", "gru", "bigru", "bilstm")
RECURRENT_KINDS = ("lstm", "gru", "bigru", "bilstm")


@dataclass(frozen=True)
class HeadConfig:
    kind: str
    num_classes: int
    hidden_units: int = 1024
    input_mode: str = "concatenated"
    feature_len: int = FUSED_DIM
    parallel_steps: int = 9
    parallel_dim: int = MAX_EMBEDDING_DIM
    chunk_len: int = DEFAULT_CHUNK_LEN
    seed: int = 0

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ConfigError(f"unknown head kind {self.kind!r}")
        if self.input_mode not in ("concatenated", "parallel"):
            raise ConfigError(f"unknown input mode {self.input_mode!r}")
        if self.hidden_units <= 0:
            raise ConfigError("hidden_units must be positive")
        if self.num_classes <= 1:
            raise ConfigError("num_classes must be at least 2")
        if self.kind in RECURRENT_KINDS and self.input_mode == "concatenated":
            if self.feature_len % self.chunk_len != 0:
                raise ConfigError(
                    f"chunk_len {self.chunk_len} does not divide feature_len "
                    f"{self.feature_len}"
                )

    @property
    def bidirectional(self) -> bool:
        return self.kind in ("bigru", "bilstm")

    @property
    def step_dim(self) -> int:
        return self.chunk_len if self.input_mode == "concatenated" else self.parallel_dim

    @property
    def flat_input_dim(self) -> int:
        if self.input_mode == "concatenated":
            return self.feature_len
        return self.parallel_steps * self.parallel_dim


@dataclass(frozen=True)
class HeadTrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int | None = None  # defaults to min(32, N*k)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.learning_rate < 0:
            raise ConfigError("learning rate must be nonnegative")


class _DenseNet(nn.Module):
    def __init__(self, in_dim: int, hidden: int, n_classes: int):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, hidden)
        self.fc2 = nn.Linear(hidden, n_classes)

    def forward(self, x):
        return self.fc2(torch.relu(self.fc1(x)))


class _RecurrentNet(nn.Module):
    def __init__(self, step_dim: int, hidden: int, n_classes: int, kind: str):
        super().__init__()
        rnn_cls = nn.LSTM if kind.endswith("lstm") else nn.GRU
        self.bidirectional = kind.startswith("bi")
        self.rnn = rnn_cls(
            step_dim, hidden, batch_first=True, bidirectional=self.bidirectional
        )
        width = hidden * (2 if self.bidirectional else 1)
        self.fc = nn.Linear(width, n_classes)

    def forward(self, x):
        out = self.rnn(x)
        hidden = out[1][0] if isinstance(self.rnn, nn.LSTM) else out[1]
        # hidden: (directions, batch, units); classify from the final
        # state of each direction, concatenated
        if self.bidirectional:
            feat = torch.cat([hidden[0], hidden[1]], dim=1)
        else:
            feat = hidden[0]
        return self.fc(feat)


@dataclass
class TrainedHead:
    config: HeadConfig
    module: nn.Module
    parameter_hash: str
    curve: list[dict] = field(default_factory=list)

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.module)

    def refresh_hash(self) -> None:
        self.parameter_hash = parameter_hash(self.module)


def init_head(config: HeadConfig) -> TrainedHead:
    """Build an untrained head with parameters drawn from config.seed."""
    if config.kind == "dense":
        module = _DenseNet(config.flat_input_dim, config.hidden_units, config.num_classes)
    else:
        module = _RecurrentNet(
            config.step_dim, config.hidden_units, config.num_classes, config.kind
        )
    seeded_init_(module, seeded_generator(config.seed))
    return TrainedHead(config=config, module=module, parameter_hash=parameter_hash(module))


def feature_array(config: HeadConfig, fused: FusedFeature) -> np.ndarray:
    """Arrange one fused feature the way the head consumes it."""
    if fused.mode != config.input_mode:
        raise DimensionError(
            f"feature mode {fused.mode!r} does not match head input {config.input_mode!r}"
        )
    if config.input_mode == "concatenated":
        if fused.vector.shape[0] != config.feature_len:
            raise DimensionError(
                f"feature length {fused.vector.shape[0]} != configured "
                f"{config.feature_len}"
            )
        if config.kind == "dense":
            return fused.vector
        return chunk_for_recurrence(fused, config.chunk_len)
    if fused.sequence.shape != (config.parallel_steps, config.parallel_dim):
        raise DimensionError(
            f"sequence shape {fused.sequence.shape} != configured "
            f"({config.parallel_steps}, {config.parallel_dim})"
        )
    if config.kind == "dense":
        return fused.sequence.reshape(-1)
    return fused.sequence


def _batch_tensor(config: HeadConfig, features) -> torch.Tensor:
    return to_tensor(np.stack([feature_array(config, f) for f in features]))


def train_head(
    head: TrainedHead, support, cfg: HeadTrainConfig | None = None
) -> TrainedHead:
    """Minimize cross-entropy on the support set; deterministic in seeds.

    ``support`` is a list of (FusedFeature, label) pairs with at least
    one sample per class. Training mutates the head in place and refreshes
    its parameter hash; the per-epoch loss/accuracy curve is recorded.
    """
    cfg = cfg or HeadTrainConfig()
    if not support:
        raise LabelError("support set is empty")
    labels = np.asarray([label for _, label in support], dtype=np.int64)
    n_classes = head.config.num_classes
    if labels.min() < 0 or labels.max() >= n_classes:
        raise LabelError(
            f"labels must lie in [0, {n_classes}); got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    if len(set(labels.tolist())) < n_classes:
        raise LabelError("support must contain at least one sample per class")
    batch_size = cfg.batch_size or min(32, len(support))
    if batch_size > len(support):
        raise ConfigError(
            f"batch_size {batch_size} exceeds support size {len(support)}"
        )

    inputs = _batch_tensor(head.config, [f for f, _ in support])
    targets = torch.from_numpy(labels)
    gen = seeded_generator(cfg.seed)
    optimizer = torch.optim.Adam(head.module.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    head.module.train()
    head.curve = []
    for epoch in range(cfg.epochs):
        perm = torch.randperm(len(support), generator=gen)
        losses, correct = [], 0
        for start in range(0, len(support), batch_size):
            idx = perm[start : start + batch_size]
            optimizer.zero_grad()
            logits = head.module(inputs[idx])
            loss = loss_fn(logits, targets[idx])
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"loss became non-finite at epoch {epoch}")
            loss.backward()
            optimizer.step()
            losses.append(float(loss))
            correct += int((logits.argmax(dim=1) == targets[idx]).sum())
        head.curve.append(
            {
                "epoch": epoch,
                "loss": float(np.mean(losses)),
                "accuracy": correct / len(support),
            }
        )
    head.module.eval()
    head.refresh_hash()
    return head


@torch.no_grad()
def predict(head: TrainedHead, feature: FusedFeature) -> np.ndarray:
    """Class probability vector; argmax ties break toward the lowest index."""
    return predict_batch(head, [feature])[0]


@torch.no_grad()
def predict_batch(head: TrainedHead, features) -> np.ndarray:
    head.module.eval()
    logits = head.module(_batch_tensor(head.config, features))
    return torch.softmax(logits.double(), dim=1).numpy()


@dataclass(frozen=True)
class TaskResult:
    accuracy: float
    confusion: np.ndarray  # (true, predicted) counts
    total: int


def evaluate_task(head: TrainedHead, query) -> TaskResult:
    """Accuracy and confusion counts of the head on a query set."""
    if not query:
        raise EmptyQuery("query set is empty")
    n = head.config.num_classes
    labels = np.asarray([label for _, label in query], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= n:
        raise LabelError(f"query labels must lie in [0, {n})")
    probs = predict_batch(head, [f for f, _ in query])
    predicted = probs.argmax(axis=1)  # np.argmax returns the lowest tied index
    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (labels, predicted), 1)
    correct = int((predicted == labels).sum())
    return TaskResult(accuracy=correct / len(query), confusion=confusion, total=len(query))


def save_head(head: TrainedHead, path: Path | str) -> None:
    """Write the parameter blob plus a JSON sidecar next to it."""
    path = Path(path)
    torch.save(head.module.state_dict(), path)
    sidecar = {
        "config": {
            "kind": head.config.kind,
            "num_classes": head.config.num_classes,
            "hidden_units": head.config.hidden_units,
            "input_mode": head.config.input_mode,
            "feature_len": head.config.feature_len,
            "parallel_steps": head.config.parallel_steps,
            "parallel_dim": head.config.parallel_dim,
            "chunk_len": head.config.chunk_len,
            "seed": head.config.seed,
        },
        "parameter_hash": head.parameter_hash,
        "curve": head.curve,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_head(path: Path | str) -> TrainedHead:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text(encoding="utf-8"))
    config = HeadConfig(**sidecar["config"])
    head = init_head(config)
    head.module.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
    head.refresh_hash()
    if head.parameter_hash != sidecar["parameter_hash"]:
        raise DimensionError(f"parameter hash mismatch loading {path}")
    head.curve = sidecar["curve"]
    return head
