"""Quantum convolution over Mel-spectrogram patches.

Each non-overlapping ``k x k`` tile is angle-encoded onto ``k**2`` wires
(row-major), evolved through the filter circuit and read out as per-wire
``<Z>``, giving a feature map of shape ``(ceil(bands/k), ceil(frames/k), k**2)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._rng import NOISE, SHOTS, stream
from .circuits import build_circuit, encode_patch, encoding_matrices
from .exceptions import InvalidArgumentError
from .noise import NoiseModel, _noisy_expectations
from .qsim import _sample_counts, apply_1q, apply_gate_batch, expval_z_batch, init_batch

KERNELS = (1, 2, 3)
DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class QuanvConfig:
    kernel: int = 2
    circuit_seed: int = 0
    layout: str = "auto"
    n_gates: Optional[int] = None
    noise: Optional[NoiseModel] = None
    shots: Optional[int] = None

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InvalidArgumentError(f"kernel must be one of {KERNELS}, got {self.kernel}")
        if self.shots is not None and (int(self.shots) != self.shots or self.shots < 1):
            raise InvalidArgumentError("shots must be a positive integer")
        if self.noise is not None and not isinstance(self.noise, NoiseModel):
            raise InvalidArgumentError("noise must be a NoiseModel")
        if self.shots is not None and self.noise is not None and not self.noise.is_noiseless:
            raise InvalidArgumentError("shot sampling and trajectory noise are mutually exclusive")

    @property
    def stride(self):
        return self.kernel

    @property
    def n_wires(self):
        return self.kernel * self.kernel

    @property
    def analytic(self):
        return self.shots is None and (self.noise is None or self.noise.is_noiseless)

    def build_circuit(self):
        return build_circuit(self.circuit_seed, self.kernel, self.layout, self.n_gates)


def normalize(mel):
    """Affine min-max map onto [0, 1]; a constant input maps to zeros."""
    mel = np.asarray(mel, dtype=float)
    if not np.all(np.isfinite(mel)):
        raise InvalidArgumentError("spectrogram contains non-finite values")
    lo = mel.min()
    hi = mel.max()
    if hi == lo:
        return np.zeros_like(mel)
    return (mel - lo) / (hi - lo)


def feature_shape(bands, frames, kernel):
    return (-(-bands // kernel), -(-frames // kernel), kernel * kernel)


def patchify(mel, k):
    """Zero-pad to multiples of ``k`` and tile; returns (rows, cols, k*k).

    ``out[r, c]`` is the tile at grid position ``(r, c)`` flattened row-major,
    so value ``j`` is destined for wire ``j``.
    """
    if k not in KERNELS:
        raise InvalidArgumentError(f"kernel must be one of {KERNELS}, got {k}")
    mel = np.asarray(mel, dtype=float)
    if mel.ndim != 2:
        raise InvalidArgumentError("expected a 2-D (bands, frames) array")
    bands, frames = mel.shape
    rows, cols, _ = feature_shape(bands, frames, k)
    padded = np.zeros((rows * k, cols * k))
    padded[:bands, :frames] = mel
    tiles = padded.reshape(rows, k, cols, k).transpose(0, 2, 1, 3)
    return tiles.reshape(rows, cols, k * k)


def _analytic(values, circuit):
    n = circuit.n_wires
    enc = encoding_matrices(values)
    amps = init_batch(values.shape[0], n)
    for j in range(n):
        amps = apply_1q(amps, enc[:, j], j, n)
    for g in circuit.gates:
        amps = apply_gate_batch(amps, g, n)
    return amps


def _evaluate_chunk(values, first_index, circuit, config):
    n = circuit.n_wires
    if config.analytic:
        return expval_z_batch(_analytic(values, circuit), n)
    out = np.empty((values.shape[0], n))
    if config.shots is not None:
        amps = _analytic(values, circuit)
        probs = amps.real ** 2 + amps.imag ** 2
        for i in range(values.shape[0]):
            rng = stream(config.circuit_seed, SHOTS, first_index + i)
            out[i] = _sample_counts(probs[i], int(config.shots), rng, n)
        return out
    for i in range(values.shape[0]):
        rng = stream(config.circuit_seed, NOISE, first_index + i)
        out[i] = _noisy_expectations(encode_patch(values[i]), circuit, config.noise, rng)
    return out


def _check_normalized(mel):
    mel = np.asarray(mel, dtype=float)
    if mel.ndim != 2:
        raise InvalidArgumentError("expected a 2-D (bands, frames) array")
    if not np.all(np.isfinite(mel)) or mel.min(initial=0.0) < 0.0 or mel.max(initial=0.0) > 1.0:
        raise InvalidArgumentError("spectrogram must be normalized into [0, 1] before encoding")
    return mel


def quanv_encode(mel, config, circuit=None, n_jobs=1, chunk_size=DEFAULT_CHUNK):
    """Run the quantum filter over every tile of a normalized spectrogram.

    Tiles are evaluated in chunks, optionally on a thread pool; each chunk
    writes a disjoint slice of the output and every kernel is elementwise per
    tile, so the result does not depend on ``n_jobs`` or ``chunk_size``.
    Noisy and shot-sampled modes seed tile ``i`` from ``(circuit_seed, i)``.
    """
    mel = _check_normalized(mel)
    if circuit is None:
        circuit = config.build_circuit()
    if circuit.n_wires != config.n_wires:
        raise InvalidArgumentError(
            f"kernel {config.kernel} needs a {config.n_wires}-wire circuit, got {circuit.n_wires}"
        )
    tiles = patchify(mel, config.kernel)
    rows, cols, n = tiles.shape
    flat = tiles.reshape(-1, n)
    out = np.empty_like(flat)
    bounds = [(s, min(s + chunk_size, flat.shape[0])) for s in range(0, flat.shape[0], chunk_size)]

    def run(bound):
        s, e = bound
        out[s:e] = _evaluate_chunk(flat[s:e], s, circuit, config)

    if n_jobs == 1 or len(bounds) <= 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            list(pool.map(run, bounds))
    return out.reshape(rows, cols, n)


class QuanvTransformer(TransformerMixin, BaseEstimator):
    """Quanvolution as a stateless sklearn transformer.

    ``transform`` maps (n, bands, frames) spectrograms to
    (n, rows, cols, kernel**2) feature maps.  ``fit`` only validates
    parameters and builds the circuit (``circuit_``).
    """

    def __init__(
        self,
        kernel=2,
        circuit_seed=0,
        layout="auto",
        n_gates=None,
        shots=None,
        gate_error_p=0.0,
        readout_flip_p=0.0,
        trajectories=100,
        normalize=True,
        n_jobs=1,
    ):
        self.kernel = kernel
        self.circuit_seed = circuit_seed
        self.layout = layout
        self.n_gates = n_gates
        self.shots = shots
        self.gate_error_p = gate_error_p
        self.readout_flip_p = readout_flip_p
        self.trajectories = trajectories
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _make_config(self):
        noise = None
        if self.gate_error_p or self.readout_flip_p:
            noise = NoiseModel(self.gate_error_p, self.readout_flip_p, self.trajectories)
        return QuanvConfig(
            kernel=self.kernel,
            circuit_seed=self.circuit_seed,
            layout=self.layout,
            n_gates=self.n_gates,
            noise=noise,
            shots=self.shots,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._make_config()
        self.circuit_ = self.config_.build_circuit()
        return self

    def transform(self, X):
        check_is_fitted(self, "circuit_")
        X = np.asarray(X, dtype=float)
        single = X.ndim == 2
        if single:
            X = X[None]
        if X.ndim != 3:
            raise InvalidArgumentError("expected spectrograms of shape (n, bands, frames)")
        out = []
        for mel in X:
            if self.normalize:
                mel = normalize(mel)
            out.append(quanv_encode(mel, self.config_, self.circuit_, n_jobs=self.n_jobs))
        out = np.stack(out)
        return out[0] if single else out
