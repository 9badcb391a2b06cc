"""Named parameter store shared by checkpointing and the training loop."""

from __future__ import annotations

from typing import Iterator, Mapping

import torch
from torch import nn

from ..errors import CorruptCheckpoint


class ParameterStore:
    """Named, shaped numeric arrays.

    Entries keep references to live tensors when built from modules, so a
    store created before training reflects updated values at save time.
    Names are unique and shapes are fixed at creation.
    """

    def __init__(self):
        self._entries: dict[str, torch.Tensor] = {}

    def add(self, name: str, tensor: torch.Tensor) -> None:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name: {name}")
        self._entries[name] = tensor

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return sorted(self._entries)

    def items(self) -> Iterator[tuple[str, torch.Tensor]]:
        for name in self.names():
            yield name, self._entries[name]

    @classmethod
    def from_modules(
        cls,
        modules: Mapping[str, nn.Module],
        extras: Mapping[str, torch.Tensor] | None = None,
    ) -> "ParameterStore":
        store = cls()
        for prefix, module in modules.items():
            for name, param in module.named_parameters():
                store.add(f"{prefix}.{name}", param.data)
        for name, tensor in (extras or {}).items():
            store.add(name, tensor)
        return store

    def detached_copy(self) -> "ParameterStore":
        copy = ParameterStore()
        for name, tensor in self.items():
            copy.add(name, tensor.detach().clone())
        return copy

    def load_into(self, modules: Mapping[str, nn.Module]) -> None:
        """Copy stored values into module parameters, checking shapes."""
        for prefix, module in modules.items():
            for name, param in module.named_parameters():
                full_name = f"{prefix}.{name}"
                if full_name not in self._entries:
                    raise CorruptCheckpoint(f"missing checkpoint entry: {full_name}")
                stored = self._entries[full_name]
                if tuple(stored.shape) != tuple(param.shape):
                    raise CorruptCheckpoint(
                        f"{full_name}: checkpoint shape {tuple(stored.shape)} does "
                        f"not match model shape {tuple(param.shape)}"
                    )
                with torch.no_grad():
                    param.copy_(stored.to(param.dtype))

    def entry_bytes(self, name: str) -> bytes:
        return self._entries[name].detach().cpu().numpy().tobytes()
