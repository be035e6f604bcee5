"""Grayscale PGM export of spectrograms and feature channels."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import FormatError


def to_pixels(values, lo=-1.0, hi=1.0):
    """Linear map of [lo, hi] onto 0..255, rounding half up (so the midpoint is 128)."""
    v = np.clip((np.asarray(values, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path, pixels):
    """Binary (P5) 8-bit PGM.  Row 0 of ``pixels`` is the top of the image."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    if pixels.ndim != 2:
        raise FormatError("PGM image must be 2-D")
    h, w = pixels.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def read_pgm(path):
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM supported")
    body = data[len(data) - w * h:]
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def feature_images(features):
    """One image per channel; frequency increases upward."""
    fm = np.asarray(features)
    return [to_pixels(fm[::-1, :, c]) for c in range(fm.shape[2])]


def mel_image(mel01):
    return to_pixels(np.asarray(mel01)[::-1], lo=0.0, hi=1.0)
