"""On-disk weight store with an index and hash verification.

Layout: ``<dir>/<critic_id>.<state>.<hash>.bin`` holding a torch
state dict, plus ``index.json`` mapping ``<critic_id>.<state>`` to the
current hash and file name. Loading re-hashes the parameters and rejects
any mismatch, so a tampered or truncated file can never masquerade as
the weights it claims to be.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch import nn

from ..errors import WeightsUnavailable
from ..torchutil import parameter_hash

INDEX_NAME = "index.json"


class WeightStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / INDEX_NAME

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {}
        with open(self._index_path, encoding="utf-8") as fh:
            return json.load(fh)

    def _write_index(self, index: dict) -> None:
        with open(self._index_path, "w", encoding="utf-8") as fh:
            json.dump(index, fh, sort_keys=True, indent=2)
            fh.write("\n")

    @staticmethod
    def _key(critic_id: str, state: str) -> str:
        return f"{critic_id}.{state}"

    def has(self, critic_id: str, state: str) -> bool:
        return self._key(critic_id, state) in self._read_index()

    def stored_hash(self, critic_id: str, state: str) -> str | None:
        entry = self._read_index().get(self._key(critic_id, state))
        return entry["hash"] if entry else None

    def save(self, critic_id: str, state: str, module: nn.Module) -> str:
        weights_hash = parameter_hash(module)
        filename = f"{critic_id}.{state}.{weights_hash}.bin"
        torch.save(module.state_dict(), self.root / filename)
        index = self._read_index()
        index[self._key(critic_id, state)] = {"hash": weights_hash, "file": filename}
        self._write_index(index)
        return weights_hash

    def load_into(self, critic_id: str, state: str, module: nn.Module) -> str:
        """Load stored weights into ``module`` and verify the hash."""
        entry = self._read_index().get(self._key(critic_id, state))
        if entry is None:
            raise WeightsUnavailable(f"no stored weights for {critic_id} ({state})")
        path = self.root / entry["file"]
        if not path.exists():
            raise WeightsUnavailable(f"weight file missing: {path}")
        try:
            state_dict = torch.load(path, map_location="cpu", weights_only=True)
            module.load_state_dict(state_dict)
        except WeightsUnavailable:
            raise
        except Exception as exc:
            raise WeightsUnavailable(f"cannot load {path}: {exc}") from exc
        actual = parameter_hash(module)
        if actual != entry["hash"]:
            raise WeightsUnavailable(
                f"hash mismatch for {path.name}: index says {entry['hash']}, "
                f"file hashes to {actual}"
            )
        return actual
