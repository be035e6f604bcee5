import numpy as np
import pytest

from quanvspeech import dsp
from quanvspeech.fedsvc import Registry, make_server

SECRET_SEED = 918273645


def synth_clip(label, rng):
    """Toy keyword: 'yes' is a low tone, 'no' a high tone, both with noise and an envelope."""
    f = rng.uniform(300, 700) if label == "yes" else rng.uniform(2000, 3500)
    start = int(rng.integers(0, 4000))
    length = int(rng.integers(6000, 10000))
    x = np.zeros(dsp.CLIP_SAMPLES)
    seg = np.arange(length)
    env = np.hanning(length)
    x[start:start + length] = 0.6 * env * np.sin(2 * np.pi * f * seg / dsp.SAMPLE_RATE + rng.uniform(0, 6.28))
    x += rng.normal(scale=0.02, size=x.shape)
    return np.clip(x, -1, 1)


def make_dataset(root, per_class=5, classes=("yes", "no"), seed=0):
    rng = np.random.default_rng(seed)
    for label in classes:
        (root / label).mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            dsp.write_wav(root / label / f"{i:03d}.wav", synth_clip(label, rng))
    return root


@pytest.fixture
def dataset(tmp_path):
    return make_dataset(tmp_path / "data")


@pytest.fixture
def registry():
    return Registry.from_dict({"models": {
        "kws-2x2": {"seed": SECRET_SEED, "kernel": 2},
        "kws-3x3": {"seed": SECRET_SEED + 1, "kernel": 3},
        "noisy-2x2": {"seed": SECRET_SEED + 2, "kernel": 2,
                      "noise": {"gate_error_p": 0.05, "readout_flip_p": 0.01, "trajectories": 8}},
    }})


@pytest.fixture
def server(registry):
    srv = make_server("127.0.0.1", 0, registry)
    srv.start_background()
    yield srv
    srv.shutdown()
    srv.server_close()


# one summary line per acceptance criterion
_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
