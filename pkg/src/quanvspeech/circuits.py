"""Circuit construction: the fixed 4-qubit filter, seeded random filters,
the patch encoder and the measurement decoder."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import CIRCUIT, stream
from .exceptions import InvalidArgumentError
from .qsim import Gate, StateVector, expval_z_batch

RANDOM_WIRE_COUNTS = (1, 4, 9)


@dataclass(frozen=True)
class QuantumCircuit:
    n_wires: int
    gates: tuple = field(default_factory=tuple)
    seed: int = 0
    params_secret: bool = True
    # "fixed" or "random"; kept so a circuit can be regenerated from its seed
    layout: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for w in g.wires:
                if not 0 <= w < self.n_wires:
                    raise InvalidArgumentError(
                        f"gate {g.kind} touches wire {w}, circuit has {self.n_wires}"
                    )

    def __len__(self):
        return len(self.gates)

    def to_dict(self):
        return {
            "n_wires": self.n_wires,
            "seed": self.seed,
            "layout": self.layout,
            "params_secret": self.params_secret,
            "gates": [g.to_dict() for g in self.gates],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        return cls(
            n_wires=int(d["n_wires"]),
            gates=tuple(Gate.from_dict(g) for g in d["gates"]),
            seed=int(d.get("seed", 0)),
            params_secret=bool(d.get("params_secret", True)),
            layout=d.get("layout", "random"),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def encode_patch(values):
    """Angle-encode a flattened patch: gate ``j`` is ``Ry(pi * values[j])`` on wire ``j``."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(values)) or np.any(values < 0.0) or np.any(values > 1.0):
        raise InvalidArgumentError("patch values must lie in [0, 1]")
    return [Gate("Ry", j, angle=math.pi * float(v)) for j, v in enumerate(values)]


def encoding_matrices(values):
    """Per-row Ry matrices for a (batch, wires) array of patch values.

    Batched equivalent of :func:`encode_patch`.
    """
    half = (np.pi * np.asarray(values, dtype=float)) / 2.0
    c = np.cos(half)
    s = np.sin(half)
    mats = np.empty(values.shape + (2, 2), dtype=complex)
    mats[..., 0, 0] = c
    mats[..., 0, 1] = -s
    mats[..., 1, 0] = s
    mats[..., 1, 1] = c
    return mats


def build_fixed_circuit(seed):
    """The 4-wire filter of the deployed 2x2 design.

    After the encoding layer: Rx on wire 0, Rz on wire 3, CNOT 2->1,
    CNOT 3->0, then Ry and Rx on wire 0.  Rotation angles are uniform in
    [0, 2*pi), drawn in that gate order.
    """
    rng = stream(seed, CIRCUIT, 0)
    a = rng.uniform(0.0, 2.0 * math.pi, size=4)
    gates = (
        Gate("Rx", 0, angle=a[0]),
        Gate("Rz", 3, angle=a[1]),
        Gate("CNOT", 1, control=2),
        Gate("CNOT", 0, control=3),
        Gate("Ry", 0, angle=a[2]),
        Gate("Rx", 0, angle=a[3]),
    )
    return QuantumCircuit(4, gates, seed=int(seed), layout="fixed")


def build_random_circuit(seed, n_wires, n_gates):
    if n_wires not in RANDOM_WIRE_COUNTS:
        raise InvalidArgumentError(f"n_wires must be one of {RANDOM_WIRE_COUNTS}, got {n_wires}")
    if isinstance(n_gates, bool) or int(n_gates) != n_gates or n_gates < 0:
        raise InvalidArgumentError("n_gates must be a non-negative integer")
    kinds = ("Rx", "Ry", "Rz") if n_wires == 1 else ("Rx", "Ry", "Rz", "CNOT")
    rng = stream(seed, CIRCUIT, 1, n_wires)
    gates = []
    for _ in range(int(n_gates)):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "CNOT":
            control = int(rng.integers(n_wires))
            target = int(rng.integers(n_wires - 1))
            if target >= control:
                target += 1
            gates.append(Gate("CNOT", target, control=control))
        else:
            wire = int(rng.integers(n_wires))
            gates.append(Gate(kind, wire, angle=float(rng.uniform(0.0, 2.0 * math.pi))))
    return QuantumCircuit(n_wires, tuple(gates), seed=int(seed), layout="random")


def default_n_gates(n_wires):
    return 2 * n_wires


def build_circuit(seed, kernel, layout="auto", n_gates=None):
    """Circuit for a ``kernel x kernel`` filter.

    ``layout="auto"`` picks the fixed 4-wire design for kernel 2 and a random
    circuit with ``2 * kernel**2`` gates otherwise.
    """
    if kernel not in (1, 2, 3):
        raise InvalidArgumentError(f"kernel must be 1, 2 or 3, got {kernel}")
    n_wires = kernel * kernel
    if layout == "auto":
        layout = "fixed" if kernel == 2 and n_gates is None else "random"
    if layout == "fixed":
        if kernel != 2:
            raise InvalidArgumentError("the fixed layout is a 4-wire (2x2) circuit")
        return build_fixed_circuit(seed)
    if layout == "random":
        return build_random_circuit(seed, n_wires, default_n_gates(n_wires) if n_gates is None else n_gates)
    raise InvalidArgumentError(f"unknown circuit layout {layout!r}")


def decode(state):
    """Per-wire ``<Z>`` of a state, each in [-1, 1]."""
    if isinstance(state, StateVector):
        return expval_z_batch(state.amplitudes[None, :], state.n_wires)[0]
    raise InvalidArgumentError("decode expects a StateVector")
