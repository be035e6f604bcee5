import math

import numpy as np
import pytest

from quanvspeech.circuits import QuantumCircuit, build_fixed_circuit, build_random_circuit, encode_patch
from quanvspeech.exceptions import InvalidArgumentError
from quanvspeech.noise import NoiseModel, apply_noisy_circuit
from quanvspeech.qsim import apply_gates, expval_z_batch, init_state

T = 10_000
TOL = 3 / math.sqrt(T)


def noiseless(values, circuit):
    s = apply_gates(init_state(circuit.n_wires), encode_patch(values) + list(circuit.gates))
    return expval_z_batch(s.amplitudes[None, :], circuit.n_wires)[0]


@pytest.mark.parametrize("trajectories", [1, 50])
def test_zero_noise_is_exact(trajectories):
    c = build_fixed_circuit(3)
    values = [0.1, 0.7, 0.3, 0.9]
    out = apply_noisy_circuit(encode_patch(values), c, NoiseModel(0, 0, trajectories), 5)
    np.testing.assert_array_equal(out, noiseless(values, c))


def test_readout_half_flip_erases_signal():
    for seed in range(3):
        c = build_random_circuit(seed, 4, 8)
        out = apply_noisy_circuit(encode_patch([0.2, 0.0, 0.9, 0.4]), c, NoiseModel(0, 0.5, T), seed)
        assert np.all(np.abs(out) < TOL)


def test_depolarizing_contraction_monotone():
    circuit = QuantumCircuit(1)
    mags = []
    for p in (0.0, 0.05, 0.2):
        out = apply_noisy_circuit(encode_patch([1.0]), circuit, NoiseModel(p, 0, T), 17)
        mags.append(abs(out[0]))
        # X or Y errors (2 of 3 Paulis) flip |1>, so <Z> = -(1 - 4p/3)
        assert abs(out[0] + (1 - 4 * p / 3)) < TOL
    assert mags[0] + TOL >= mags[1] and mags[1] + TOL >= mags[2]


def test_noisy_range_and_determinism():
    c = build_random_circuit(4, 9, 20)
    enc = encode_patch(np.linspace(0, 1, 9))
    nm = NoiseModel(0.3, 0.1, 200)
    a = apply_noisy_circuit(enc, c, nm, 99)
    b = apply_noisy_circuit(enc, c, nm, 99)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a) <= 1)
    assert not np.array_equal(a, apply_noisy_circuit(enc, c, nm, 100))


def test_noise_on_cnot_hits_target():
    # X error after the CNOT on its target flips wire 1 only
    from quanvspeech.qsim import Gate

    c = QuantumCircuit(2, (Gate("CNOT", 1, control=0),))
    out = apply_noisy_circuit(encode_patch([0.0, 0.0]), c, NoiseModel(1.0, 0, 3000), 1)
    # encoding gates also get errors: each wire ends in |1> with prob 2/3 after its Ry,
    # wire 1 also after the CNOT; check wire 0 against 1 - 4/3
    assert abs(out[0] - (1 - 4 / 3)) < 3 / math.sqrt(3000)


@pytest.mark.parametrize("kwargs", [
    {"gate_error_p": -0.1},
    {"gate_error_p": 1.5},
    {"readout_flip_p": float("nan")},
    {"trajectories": 0},
])
def test_invalid_noise_model(kwargs):
    with pytest.raises(InvalidArgumentError):
        NoiseModel(**kwargs)
