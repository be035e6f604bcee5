"""Exact statevector simulation for small qubit registers.

Conventions
-----------
* Rotations use the half-angle form ``R_s(theta) = exp(-i theta s / 2)``, so
  ``<Z>`` after ``Ry(theta)|0>`` is ``cos(theta)``.
* Wire ordering is little-endian: wire 0 is the least-significant bit of the
  basis index, so the state with only wire 0 set is basis index 1.

All kernels are elementwise numpy expressions operating on a leading batch
axis.  A row's result never depends on how many other rows share the batch,
which keeps batched and one-at-a-time evaluation bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ._rng import SHOTS, stream
from .exceptions import InvalidArgumentError, ResourceLimitError

MAX_WIRES = 15
MAX_DENSE_WIRES = 10
GATE_KINDS = ("Rx", "Ry", "Rz", "CNOT")

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Gate:
    """One gate of the {Rx, Ry, Rz, CNOT} set.

    ``angle`` is canonicalized into ``[0, 2*pi)`` on construction.  For CNOT
    ``wire`` is the target and ``control`` the control wire.
    """

    kind: str
    wire: int
    angle: float = 0.0
    control: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidArgumentError(f"unknown gate kind {self.kind!r}")
        if int(self.wire) < 0:
            raise InvalidArgumentError("wire index must be non-negative")
        object.__setattr__(self, "wire", int(self.wire))
        if self.kind == "CNOT":
            if self.control is None or int(self.control) < 0:
                raise InvalidArgumentError("CNOT needs a non-negative control wire")
            if int(self.control) == self.wire:
                raise InvalidArgumentError("CNOT control and target must differ")
            object.__setattr__(self, "control", int(self.control))
            object.__setattr__(self, "angle", 0.0)
        else:
            if self.control is not None:
                raise InvalidArgumentError(f"{self.kind} takes no control wire")
            angle = float(self.angle)
            if not math.isfinite(angle):
                raise InvalidArgumentError("rotation angle must be finite")
            angle = math.fmod(angle, _TWO_PI)
            if angle < 0.0:
                angle += _TWO_PI
            if angle >= _TWO_PI:
                angle = 0.0
            object.__setattr__(self, "angle", angle)

    @property
    def wires(self):
        return (self.wire,) if self.control is None else (self.control, self.wire)

    def matrix(self):
        """2x2 unitary for rotations, 4x4 (control as high bit) for CNOT."""
        if self.kind == "CNOT":
            return np.array(
                [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
            )
        return rotation_matrix(self.kind, self.angle)

    def to_dict(self):
        d = {"kind": self.kind, "wire": self.wire}
        if self.kind == "CNOT":
            d["control"] = self.control
        else:
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["wire"], angle=d.get("angle", 0.0), control=d.get("control"))


def rotation_matrix(kind, angle):
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    if kind == "Rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "Ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "Rz":
        return np.array([[complex(c, -s), 0], [0, complex(c, s)]], dtype=complex)
    raise InvalidArgumentError(f"{kind!r} is not a rotation")


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateVector:
    """Immutable pure state of ``n_wires`` qubits (``2**n_wires`` amplitudes)."""

    __slots__ = ("n_wires", "amplitudes")

    def __init__(self, n_wires, amplitudes):
        n_wires = _check_n_wires(n_wires)
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << n_wires:
            raise InvalidArgumentError(
                f"expected {1 << n_wires} amplitudes for {n_wires} wires, got {amps.shape[0]}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "n_wires", n_wires)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def __repr__(self):
        return f"StateVector(n_wires={self.n_wires}, amplitudes={self.amplitudes!r})"

    def __len__(self):
        return self.amplitudes.shape[0]

    def norm2(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2


def _check_n_wires(n_wires):
    if isinstance(n_wires, bool) or int(n_wires) != n_wires:
        raise InvalidArgumentError("n_wires must be an integer")
    n_wires = int(n_wires)
    if not 1 <= n_wires <= MAX_WIRES:
        raise InvalidArgumentError(f"n_wires must be in [1, {MAX_WIRES}], got {n_wires}")
    return n_wires


def _check_wire(wire, n_wires):
    if not 0 <= wire < n_wires:
        raise InvalidArgumentError(f"wire {wire} out of range for {n_wires} wires")


def init_state(n_wires):
    """``|0...0>`` on ``n_wires`` qubits."""
    n_wires = _check_n_wires(n_wires)
    amps = np.zeros(1 << n_wires, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_wires, amps)


# ---------------------------------------------------------------------------
# batched kernels: ``amps`` has shape (batch, 2**n)


def init_batch(batch, n_wires):
    amps = np.zeros((batch, 1 << n_wires), dtype=complex)
    amps[:, 0] = 1.0
    return amps


def apply_1q(amps, mat, wire, n_wires):
    """Apply a single-qubit matrix to ``wire`` of every row.

    ``mat`` is either one (2, 2) matrix or a per-row stack of shape (batch, 2, 2).
    """
    batch = amps.shape[0]
    view = amps.reshape(batch, 1 << (n_wires - 1 - wire), 2, 1 << wire)
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim == 3:
        m = mat[:, :, :, None, None]
        m00, m01, m10, m11 = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    else:
        m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    out = np.empty_like(view)
    out[:, :, 0, :] = m00 * a0 + m01 * a1
    out[:, :, 1, :] = m10 * a0 + m11 * a1
    return out.reshape(batch, -1)


@lru_cache(maxsize=None)
def _cnot_permutation(control, target, n_wires):
    idx = np.arange(1 << n_wires)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    perm.flags.writeable = False
    return perm


def apply_cnot(amps, control, target, n_wires):
    return amps[:, _cnot_permutation(control, target, n_wires)]


def apply_gate_batch(amps, gate, n_wires):
    for w in gate.wires:
        _check_wire(w, n_wires)
    if gate.kind == "CNOT":
        return apply_cnot(amps, gate.control, gate.wire, n_wires)
    return apply_1q(amps, gate.matrix(), gate.wire, n_wires)


def expval_z_batch(amps, n_wires):
    """Per-row, per-wire ``<Z>``; shape (batch, n_wires), clipped to [-1, 1]."""
    batch = amps.shape[0]
    probs = amps.real ** 2 + amps.imag ** 2
    out = np.empty((batch, n_wires))
    for w in range(n_wires):
        view = probs.reshape(batch, 1 << (n_wires - 1 - w), 2, 1 << w)
        out[:, w] = view[:, :, 0, :].sum(axis=(1, 2)) - view[:, :, 1, :].sum(axis=(1, 2))
    return np.clip(out, -1.0, 1.0)


# ---------------------------------------------------------------------------
# single-state API


def apply_gate(state, gate):
    """Return a new state with ``gate`` applied."""
    amps = apply_gate_batch(state.amplitudes[None, :], gate, state.n_wires)
    return StateVector(state.n_wires, amps[0])


def apply_gates(state, gates):
    amps = state.amplitudes[None, :]
    for g in gates:
        amps = apply_gate_batch(amps, g, state.n_wires)
    return StateVector(state.n_wires, amps[0])


def expval_z(state, wire):
    """``sum_b |amp_b|^2 * (+1 if bit(b, wire) == 0 else -1)``."""
    _check_wire(wire, state.n_wires)
    return float(expval_z_batch(state.amplitudes[None, :], state.n_wires)[0, wire])


def _embed_1q(mat, wire, n_wires):
    return np.kron(np.kron(np.eye(1 << (n_wires - 1 - wire)), mat), np.eye(1 << wire))


def _embed_cnot(control, target, n_wires):
    dim = 1 << n_wires
    u = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        row = col ^ (1 << target) if (col >> control) & 1 else col
        u[row, col] = 1.0
    return u


def gate_unitary(gate, n_wires):
    """Dense ``2**n x 2**n`` matrix of one gate built from Kronecker products."""
    for w in gate.wires:
        _check_wire(w, n_wires)
    if gate.kind == "CNOT":
        return _embed_cnot(gate.control, gate.wire, n_wires)
    return _embed_1q(gate.matrix(), gate.wire, n_wires)


def circuit_unitary(circuit):
    """Dense unitary of a circuit; a verification oracle, not the engine.

    Accepts anything with ``n_wires`` and ``gates`` attributes.
    """
    n = int(circuit.n_wires)
    if n > MAX_DENSE_WIRES:
        raise ResourceLimitError(
            f"dense unitary limited to {MAX_DENSE_WIRES} wires, circuit has {n}"
        )
    _check_n_wires(n)
    u = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        u = gate_unitary(g, n) @ u
    return u


def sample_measurement(state, shots, rng_seed):
    """Empirical per-wire ``<Z>`` from ``shots`` computational-basis samples."""
    if isinstance(shots, bool) or int(shots) != shots or shots < 1:
        raise InvalidArgumentError("shots must be a positive integer")
    probs = state.probabilities()
    return _sample_counts(probs, int(shots), stream(rng_seed, SHOTS), state.n_wires)


def _sample_counts(probs, shots, rng, n_wires):
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    idx = np.arange(probs.shape[0])
    out = np.empty(n_wires)
    for w in range(n_wires):
        ones = counts[((idx >> w) & 1) == 1].sum()
        out[w] = (shots - 2 * ones) / shots
    return out
