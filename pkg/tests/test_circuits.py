import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quanvspeech.circuits import (
    QuantumCircuit,
    build_circuit,
    build_fixed_circuit,
    build_random_circuit,
    decode,
    encode_patch,
)
from quanvspeech.exceptions import InvalidArgumentError
from quanvspeech.qsim import Gate, apply_gates, circuit_unitary, init_state


def run(values, circuit):
    return decode(apply_gates(init_state(circuit.n_wires), encode_patch(values) + list(circuit.gates)))


def oracle(values, circuit):
    full = QuantumCircuit(circuit.n_wires, encode_patch(values) + list(circuit.gates))
    amps = circuit_unitary(full)[:, 0]
    probs = np.abs(amps) ** 2
    idx = np.arange(probs.size)
    return np.array([probs[(idx >> w) & 1 == 0].sum() - probs[(idx >> w) & 1 == 1].sum()
                     for w in range(circuit.n_wires)])


def test_encode_zeros():
    gates = encode_patch([0, 0, 0, 0])
    assert [(g.kind, g.wire, g.angle) for g in gates] == [("Ry", j, 0.0) for j in range(4)]
    np.testing.assert_array_equal(decode(apply_gates(init_state(4), gates)), [1, 1, 1, 1])


def test_encode_ones():
    out = decode(apply_gates(init_state(4), encode_patch([1, 1, 1, 1])))
    np.testing.assert_allclose(out, [-1, -1, -1, -1], atol=1e-12)


def test_encode_half():
    out = decode(apply_gates(init_state(4), encode_patch([0.5, 0, 0, 0])))
    np.testing.assert_allclose(out, [0, 1, 1, 1], atol=1e-12)


@pytest.mark.parametrize("bad", [[-0.1, 0, 0, 0], [0, 1.01, 0, 0], [float("nan")] * 4])
def test_encode_rejects_out_of_range(bad):
    with pytest.raises(InvalidArgumentError):
        encode_patch(bad)


def test_decode_half_rotations():
    gates = [Gate("Ry", j, angle=math.pi / 2) for j in range(4)]
    np.testing.assert_allclose(decode(apply_gates(init_state(4), gates)), 0, atol=1e-10)


def test_fixed_circuit_layout():
    c = build_fixed_circuit(7)
    assert c.n_wires == 4
    assert Counter(g.kind for g in c.gates) == Counter({"Rx": 2, "Ry": 1, "Rz": 1, "CNOT": 2})
    layout = [(g.kind, g.control, g.wire) for g in c.gates]
    assert layout == [
        ("Rx", None, 0),
        ("Rz", None, 3),
        ("CNOT", 2, 1),
        ("CNOT", 3, 0),
        ("Ry", None, 0),
        ("Rx", None, 0),
    ]
    for g in c.gates:
        assert 0 <= g.angle < 2 * math.pi


def test_fixed_circuit_deterministic():
    assert build_fixed_circuit(7) == build_fixed_circuit(7)
    assert build_fixed_circuit(7) != build_fixed_circuit(8)


def test_fixed_circuit_matches_oracle_on_zero_patch():
    c = build_fixed_circuit(7)
    assert np.abs(run([0, 0, 0, 0], c) - oracle([0, 0, 0, 0], c)).max() < 1e-9


def test_random_circuit_zero_gates_is_encoding_only():
    c = build_random_circuit(5, 1, 0)
    assert len(c) == 0
    for v in np.linspace(0, 1, 11):
        assert abs(run([v], c)[0] - math.cos(math.pi * v)) < 1e-12


def test_random_circuit_deterministic():
    a = build_random_circuit(42, 4, 10)
    b = build_random_circuit(42, 4, 10)
    assert a.to_json() == b.to_json()
    assert a.gates != build_random_circuit(43, 4, 10).gates


def test_random_circuit_single_wire_has_no_cnot():
    c = build_random_circuit(1, 1, 200)
    assert all(g.kind != "CNOT" for g in c.gates)


def test_random_circuit_kind_distribution():
    c = build_random_circuit(3, 9, 4000)
    counts = Counter(g.kind for g in c.gates)
    for k in ("Rx", "Ry", "Rz", "CNOT"):
        # 1000 expected, binomial sd ~ 27
        assert abs(counts[k] - 1000) < 150
    assert all(g.control != g.wire for g in c.gates if g.kind == "CNOT")


@pytest.mark.parametrize("n", [0, 2, 3, 16])
def test_random_circuit_rejects_wire_counts(n):
    with pytest.raises(InvalidArgumentError):
        build_random_circuit(0, n, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 4, 9]), st.integers(0, 25))
def test_random_circuit_pure_function_of_inputs(seed, n, g):
    assert build_random_circuit(seed, n, g) == build_random_circuit(seed, n, g)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 1000))
def test_decode_range_and_oracle(values, seed):
    c = build_random_circuit(seed, 4, 12)
    out = run(values, c)
    assert np.all(out >= -1) and np.all(out <= 1)
    assert np.abs(out - oracle(values, c)).max() < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=9, max_size=9))
def test_encoding_only_is_separable(values):
    out = decode(apply_gates(init_state(9), encode_patch(values)))
    np.testing.assert_allclose(out, np.cos(np.pi * np.array(values)), atol=1e-12)


def test_json_roundtrip():
    c = build_random_circuit(11, 4, 15)
    doc = json.loads(c.to_json())
    assert {"n_wires", "seed", "gates"} <= set(doc)
    assert all("kind" in g and "wire" in g for g in doc["gates"])
    assert QuantumCircuit.from_json(c.to_json()) == c


def test_build_circuit_dispatch():
    assert build_circuit(3, 2).layout == "fixed"
    assert build_circuit(3, 3).n_wires == 9
    assert build_circuit(3, 1).n_wires == 1
    assert build_circuit(3, 2, layout="random", n_gates=5).layout == "random"
    with pytest.raises(InvalidArgumentError):
        build_circuit(3, 4)
    with pytest.raises(InvalidArgumentError):
        build_circuit(3, 3, layout="fixed")


def test_circuit_rejects_out_of_range_gate():
    with pytest.raises(InvalidArgumentError):
        QuantumCircuit(2, (Gate("Rx", 3, angle=0.1),))
