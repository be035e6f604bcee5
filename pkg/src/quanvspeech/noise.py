"""Stochastic Pauli noise emulated by trajectory averaging.

A two-parameter stand-in for device noise: after every gate a uniformly chosen
Pauli (X, Y or Z) hits the gate's target wire with probability
``gate_error_p``, and each wire's readout sign flips with probability
``readout_flip_p``.  Trajectories are simulated as a batch of pure states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import NOISE, stream
from .exceptions import InvalidArgumentError
from .qsim import PAULI, apply_1q, apply_gate_batch, expval_z_batch, init_batch

# index 0 is "no error"; 1..3 are X, Y, Z
_ERROR_OPS = np.stack([PAULI["I"], PAULI["X"], PAULI["Y"], PAULI["Z"]])


@dataclass(frozen=True)
class NoiseModel:
    gate_error_p: float = 0.0
    readout_flip_p: float = 0.0
    trajectories: int = 100

    def __post_init__(self):
        for name in ("gate_error_p", "readout_flip_p"):
            p = float(getattr(self, name))
            if not math.isfinite(p) or not 0.0 <= p <= 1.0:
                raise InvalidArgumentError(f"{name} must be a probability in [0, 1], got {p}")
            object.__setattr__(self, name, p)
        t = self.trajectories
        if isinstance(t, bool) or int(t) != t or t < 1:
            raise InvalidArgumentError("trajectories must be a positive integer")
        object.__setattr__(self, "trajectories", int(t))

    @property
    def is_noiseless(self):
        return self.gate_error_p == 0.0 and self.readout_flip_p == 0.0

    def to_dict(self):
        return {
            "gate_error_p": self.gate_error_p,
            "readout_flip_p": self.readout_flip_p,
            "trajectories": self.trajectories,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("gate_error_p", "readout_flip_p", "trajectories") if k in d})


def _noiseless(gates, n_wires):
    amps = init_batch(1, n_wires)
    for g in gates:
        amps = apply_gate_batch(amps, g, n_wires)
    return expval_z_batch(amps, n_wires)[0]


def apply_noisy_circuit(encoding, circuit, noise, rng_seed):
    """Trajectory-averaged per-wire ``<Z>`` of ``encoding`` followed by ``circuit``.

    All random draws for trajectory ``t`` sit in row ``t`` of arrays drawn up
    front from the ``(rng_seed, NOISE)`` stream, so the result is a pure
    function of the inputs.  With both probabilities zero no draws happen and
    the noiseless expectations are returned unchanged.
    """
    if not isinstance(noise, NoiseModel):
        raise InvalidArgumentError("noise must be a NoiseModel")
    if noise.is_noiseless:
        return _noiseless(list(encoding) + list(circuit.gates), circuit.n_wires)
    return _noisy_expectations(encoding, circuit, noise, stream(rng_seed, NOISE))


def _noisy_expectations(encoding, circuit, noise, rng):
    n = circuit.n_wires
    gates = list(encoding) + list(circuit.gates)
    if noise.is_noiseless:
        return _noiseless(gates, n)

    T = noise.trajectories
    hit = rng.random((T, len(gates))) < noise.gate_error_p
    which = rng.integers(1, 4, size=(T, len(gates)))
    flips = rng.random((T, n)) < noise.readout_flip_p

    amps = init_batch(T, n)
    for i, g in enumerate(gates):
        amps = apply_gate_batch(amps, g, n)
        col = hit[:, i]
        if col.any():
            ops = _ERROR_OPS[np.where(col, which[:, i], 0)]
            amps = apply_1q(amps, ops, g.wire, n)
    ev = expval_z_batch(amps, n)
    ev = np.where(flips, -ev, ev)
    return np.clip(ev.mean(axis=0), -1.0, 1.0)
