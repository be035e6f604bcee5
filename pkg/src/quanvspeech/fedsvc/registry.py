"""Server-side model registry.

The registry file maps model ids to circuit recipes::

    {"models": {"kws-2x2": {"seed": 918273645, "kernel": 2,
                            "layout": "auto", "n_gates": null,
                            "noise": null, "shots": null}}}

Circuits are regenerated from their seeds at load time and never leave the
process.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..exceptions import InvalidArgumentError, StartupError
from ..noise import NoiseModel
from ..quanv import QuanvConfig


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    config: QuanvConfig
    circuit: object

    @property
    def kernel(self):
        return self.config.kernel

    def public_info(self):
        return {"model_id": self.model_id, "kernel": self.config.kernel}


class Registry:
    def __init__(self, entries=()):
        self._entries = {e.model_id: e for e in entries}

    def __contains__(self, model_id):
        return model_id in self._entries

    def __getitem__(self, model_id):
        return self._entries[model_id]

    def __len__(self):
        return len(self._entries)

    def ids(self):
        return sorted(self._entries)

    def public_listing(self):
        return [self._entries[k].public_info() for k in self.ids()]

    @classmethod
    def from_dict(cls, doc):
        entries = []
        try:
            for model_id, entry in doc["models"].items():
                noise = entry.get("noise")
                config = QuanvConfig(
                    kernel=int(entry["kernel"]),
                    circuit_seed=int(entry["seed"]),
                    layout=entry.get("layout", "auto"),
                    n_gates=entry.get("n_gates"),
                    noise=NoiseModel.from_dict(noise) if noise else None,
                    shots=entry.get("shots"),
                )
                entries.append(ModelEntry(model_id, config, config.build_circuit()))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidArgumentError(f"invalid registry: {exc}") from exc
        return cls(entries)

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise StartupError(f"cannot read registry {path}: {exc}") from exc
        try:
            return cls.from_dict(doc)
        except InvalidArgumentError as exc:
            raise StartupError(f"{path}: {exc}") from exc
