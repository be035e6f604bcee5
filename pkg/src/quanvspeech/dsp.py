"""Audio ingestion and log-Mel spectrogram extraction.

Front-end settings: 16 kHz mono clips of exactly one second, 1024-point FFT,
hop 256, periodic Hann window, centered frames with reflection padding,
60 triangular HTK-Mel filters spanning 0-8000 Hz, and ``log(1 + 1e4 * power)``
compression.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import FormatError, InvalidArgumentError

SAMPLE_RATE = 16000
CLIP_SAMPLES = 16000
N_FFT = 1024
HOP = 256
N_MELS = 60
LOG_SCALE = 1e4

# ten-word subset of Speech Commands used for keyword spotting
DEFAULT_CLASSES = ("left", "go", "yes", "down", "up", "on", "right", "no", "off", "stop")


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise InvalidArgumentError("audio clip must be mono (1-D samples)")
        object.__setattr__(self, "samples", s)


def fit_length(samples, n=CLIP_SAMPLES):
    """Zero-pad or truncate to exactly ``n`` samples."""
    samples = np.asarray(samples)
    if samples.shape[0] >= n:
        return samples[:n]
    return np.concatenate([samples, np.zeros(n - samples.shape[0], dtype=samples.dtype)])


def pcm16_to_clip(pcm):
    """Build a one-second clip from raw int16 samples (scaled by 1/32768)."""
    pcm = np.asarray(pcm, dtype=np.int16)
    return AudioClip(fit_length(pcm.astype(np.float64) / 32768.0))


def read_pcm16(path):
    """Return the raw int16 samples of a PCM16 mono 16 kHz WAV file."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: not a RIFF/WAVE PCM file ({exc})") from exc
    if channels != 1:
        raise FormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise FormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
    if rate != SAMPLE_RATE:
        raise FormatError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate} Hz")
    return np.frombuffer(frames, dtype="<i2")


def load_wav(path):
    return pcm16_to_clip(read_pcm16(path))


def write_wav(path, samples, sample_rate=SAMPLE_RATE, channels=1):
    """Write float samples in [-1, 1] as PCM16.  Used for fixtures and demos."""
    data = np.asarray(samples, dtype=float)
    pcm = np.clip(np.round(data * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# FFT


def fft(x):
    """Iterative radix-2 decimation-in-time FFT along the last axis."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise InvalidArgumentError(f"FFT length must be a power of two, got {n}")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    y = x[..., rev]
    lead = y.shape[:-1]
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        blocks = y.reshape(lead + (n // m, m))
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        y = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        m *= 2
    return y


def rfft(x):
    n = np.asarray(x).shape[-1]
    return fft(x)[..., : n // 2 + 1]


def hann(n):
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def n_frames(n_samples, hop=HOP):
    return -(-n_samples // hop)


def stft_power(samples, n_fft=N_FFT, hop=HOP):
    """``|STFT|^2`` with frames centered at ``t * hop``; shape (n_fft // 2 + 1, frames)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.shape[0] == 0:
        raise InvalidArgumentError("expected a non-empty 1-D signal")
    pad = n_fft // 2
    if samples.shape[0] > 1:
        padded = np.pad(samples, pad, mode="reflect")
    else:
        padded = np.pad(samples, pad, mode="edge")
    frames = n_frames(samples.shape[0], hop)
    starts = np.arange(frames) * hop
    windows = padded[starts[:, None] + np.arange(n_fft)[None, :]] * hann(n_fft)
    spectrum = rfft(windows)
    return (spectrum.real ** 2 + spectrum.imag ** 2).T


# ---------------------------------------------------------------------------
# Mel


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_band_edges(n_mels=N_MELS, fmin=0.0, fmax=None, sample_rate=SAMPLE_RATE):
    """``n_mels + 2`` filter corner frequencies in Hz, equally spaced in Mel."""
    if fmax is None:
        fmax = sample_rate / 2.0
    return mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))


def mel_filterbank(n_mels=N_MELS, sample_rate=SAMPLE_RATE, n_fft=N_FFT):
    """Triangular filters (peak 1) on FFT bin frequencies; shape (n_mels, n_fft // 2 + 1)."""
    edges = mel_band_edges(n_mels, sample_rate=sample_rate)
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lo) / (mid - lo)
    falling = (hi - freqs[None, :]) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


_FILTERBANK = None


def _default_filterbank():
    global _FILTERBANK
    if _FILTERBANK is None:
        _FILTERBANK = mel_filterbank()
        _FILTERBANK.flags.writeable = False
    return _FILTERBANK


def mel_power(samples):
    return _default_filterbank() @ stft_power(samples)


def mel_spectrogram(clip):
    """Log-compressed Mel power, shape (60, ceil(len / 256))."""
    samples = clip.samples if isinstance(clip, AudioClip) else np.asarray(clip, dtype=float)
    return np.log1p(LOG_SCALE * mel_power(samples))


class MelSpectrogramExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer: (n_clips, n_samples) audio -> (n_clips, 60, frames) log-Mel."""

    def __init__(self, clip_samples=CLIP_SAMPLES):
        self.clip_samples = clip_samples

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2:
            raise InvalidArgumentError("expected audio of shape (n_clips, n_samples)")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("audio contains non-finite samples")
        if self.clip_samples is not None:
            X = np.stack([fit_length(x, self.clip_samples) for x in X])
        return np.stack([mel_spectrogram(x) for x in X])


def tone(freq, seconds=1.0, amplitude=1.0, sample_rate=SAMPLE_RATE, phase=0.0):
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return amplitude * np.sin(2.0 * math.pi * freq * t + phase)
