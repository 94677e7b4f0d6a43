"""Seeded parameter initialization and deterministic weight hashing."""

from __future__ import annotations

import hashlib

import numpy as np
import torch
from torch import nn


def seeded_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(int(seed) % (2**63))
    return gen


@torch.no_grad()
def seeded_init_(module: nn.Module, generator: torch.Generator) -> None:
    """Re-initialize every parameter from ``generator``.

    Uses the fan-in uniform bound torch applies by default to Linear and
    recurrent layers, but drawn from an explicit generator so two modules
    built from the same seed are bit-identical regardless of global RNG
    state or construction order.
    """
    for mod in module.modules():
        if isinstance(mod, (nn.RNNBase,)):
            bound = 1.0 / (mod.hidden_size**0.5)
            for param in mod.parameters(recurse=False):
                param.uniform_(-bound, bound, generator=generator)
        elif isinstance(mod, nn.Linear):
            bound = 1.0 / (mod.in_features**0.5)
            mod.weight.uniform_(-bound, bound, generator=generator)
            if mod.bias is not None:
                mod.bias.uniform_(-bound, bound, generator=generator)
        elif isinstance(mod, nn.Conv2d):
            fan_in = mod.in_channels * mod.kernel_size[0] * mod.kernel_size[1]
            bound = 1.0 / (fan_in**0.5)
            mod.weight.uniform_(-bound, bound, generator=generator)
            if mod.bias is not None:
                mod.bias.uniform_(-bound, bound, generator=generator)
        elif isinstance(mod, (nn.BatchNorm1d, nn.BatchNorm2d)):
            mod.reset_parameters()
    if isinstance(module, nn.RNNBase):
        module.flatten_parameters()


def state_bytes(module: nn.Module) -> bytes:
    """Concatenated parameter/buffer bytes in sorted state-dict key order."""
    chunks = []
    state = module.state_dict()
    for key in sorted(state):
        tensor = state[key]
        chunks.append(key.encode("utf-8"))
        chunks.append(tensor.detach().cpu().contiguous().numpy().tobytes())
    return b"".join(chunks)


def parameter_hash(module: nn.Module) -> str:
    """64-bit digest of all parameters and buffers, as 16 hex characters."""
    return hashlib.blake2b(state_bytes(module), digest_size=8).hexdigest()


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def to_tensor(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array))
