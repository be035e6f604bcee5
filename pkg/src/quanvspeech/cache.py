"""On-disk feature cache (QNVF files) and extraction manifests.

QNVF layout, all little-endian::

    b"QNVF"  u16 version  u32 rows  u32 cols  u32 channels
    float32 data, channel-major: data[c][r][k]
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import FormatError

MAGIC = b"QNVF"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")


def encode_qnvf(features):
    """Serialize a (rows, cols, channels) feature map to QNVF bytes."""
    fm = np.asarray(features)
    if fm.ndim != 3:
        raise FormatError("feature map must be 3-D (rows, cols, channels)")
    rows, cols, channels = fm.shape
    body = np.ascontiguousarray(fm.transpose(2, 0, 1), dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, rows, cols, channels) + body


def decode_qnvf(data):
    if len(data) < _HEADER.size:
        raise FormatError("truncated QNVF header")
    magic, version, rows, cols, channels = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported QNVF version {version}")
    expected = _HEADER.size + 4 * rows * cols * channels
    if len(data) != expected:
        raise FormatError(f"QNVF payload is {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return body.reshape(channels, rows, cols).transpose(1, 2, 0).astype(np.float32)


def write_qnvf(path, features):
    Path(path).write_bytes(encode_qnvf(features))


def read_qnvf(path):
    return decode_qnvf(Path(path).read_bytes())


@dataclass
class ManifestEntry:
    id: str
    label: str
    file: str


@dataclass
class Manifest:
    split: str
    kernel: int
    classes: list
    entries: list = field(default_factory=list)
    path: Path = None

    def to_dict(self):
        return {
            "split": self.split,
            "kernel": self.kernel,
            "classes": list(self.classes),
            "entries": [{"id": e.id, "label": e.label, "file": e.file} for e in self.entries],
        }

    def save(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        self.path = path

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text())
            m = cls(
                split=d["split"],
                kernel=int(d["kernel"]),
                classes=list(d["classes"]),
                entries=[ManifestEntry(e["id"], e["label"], e["file"]) for e in d["entries"]],
                path=path,
            )
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: unreadable manifest ({exc})") from exc
        unknown = {e.label for e in m.entries} - set(m.classes)
        if unknown:
            raise FormatError(f"{path}: labels {sorted(unknown)} not in class list")
        return m

    def resolve(self, entry):
        base = self.path.parent if self.path is not None else Path(".")
        return base / entry.file

    def load_features(self):
        """Stack every entry's feature map; returns (features, label indices)."""
        fms = [read_qnvf(self.resolve(e)) for e in self.entries]
        index = {c: i for i, c in enumerate(self.classes)}
        return fms, np.array([index[e.label] for e in self.entries], dtype=int)
