import base64
import logging
import socket
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import requests

from conftest import SECRET_SEED, synth_clip
from quanvspeech import dsp
from quanvspeech.exceptions import RemoteError, StartupError, TransportError
from quanvspeech.fedsvc import EncodeRequest, QuanvClient, Registry, encode_remote, make_server
from quanvspeech.fedsvc.server import handle_encode
from quanvspeech.quanv import QuanvConfig, normalize, quanv_encode


def pcm16(x):
    return np.clip(np.round(x * 32767), -32768, 32767).astype(np.int16)


def secrets_of(registry):
    out = []
    for mid in registry.ids():
        entry = registry[mid]
        out.append(str(entry.config.circuit_seed))
        for g in entry.circuit.gates:
            if g.kind != "CNOT":
                out.append(repr(g.angle))
                out.append(repr(g.angle)[:12])
    return out


def test_health(server):
    doc = requests.get(server.url + "/v1/health", timeout=10).json()
    assert doc["status"] == "ok"
    assert [m["model_id"] for m in doc["models"]] == ["kws-2x2", "kws-3x3", "noisy-2x2"]


def test_unknown_model(server):
    r = requests.post(server.url + "/v1/encode", json={"model_id": "nope", "kernel": 2, "mel": [[0.0]] * 60})
    assert r.status_code == 404
    assert r.json()["error"] == "MODEL_NOT_FOUND"


def test_encode_mel_dims(server):
    mel = np.random.default_rng(0).random((60, 100))
    fm = QuanvClient(server.url).encode(EncodeRequest("kws-2x2", 2, mel=mel))
    assert fm.shape == (30, 50, 4)


def test_remote_equals_local(server):
    mel = np.random.default_rng(1).random((60, 63)) * 9
    client = QuanvClient(server.url)
    remote = encode_remote(client, EncodeRequest("kws-2x2", 2, mel=mel))
    local = quanv_encode(normalize(mel), QuanvConfig(kernel=2, circuit_seed=SECRET_SEED))
    assert np.abs(remote - local).max() == 0


def test_59_bands_rejected(server):
    with pytest.raises(RemoteError) as err:
        QuanvClient(server.url).encode(EncodeRequest("kws-2x2", 2, mel=np.zeros((59, 10))))
    assert err.value.code == "VALIDATION_ERROR"
    assert "60" in err.value.detail


def test_kernel_mismatch_rejected(server):
    with pytest.raises(RemoteError) as err:
        QuanvClient(server.url).encode(EncodeRequest("kws-2x2", 3, mel=np.zeros((60, 10))))
    assert err.value.code == "VALIDATION_ERROR"


@pytest.mark.parametrize("body", [
    {"model_id": "kws-2x2", "kernel": 2},
    {"model_id": "kws-2x2", "kernel": 2, "mel": [[0.0]] * 60, "audio": "AAAA"},
    {"model_id": "kws-2x2", "kernel": 2, "audio": "***"},
    {"model_id": "kws-2x2", "kernel": 2, "mel": [[0.0, 1.0]] * 59 + [[0.0]]},
    {"model_id": "kws-2x2", "kernel": 2, "mel": [["a"]] * 60},
    {"model_id": 5},
])
def test_malformed_requests(server, body):
    r = requests.post(server.url + "/v1/encode", json=body, timeout=10)
    assert r.status_code == 400
    assert r.json()["error"] == "VALIDATION_ERROR"


def test_bad_json_and_routes(server):
    r = requests.post(server.url + "/v1/encode", data=b"{nope", timeout=10)
    assert r.status_code == 400 and r.json()["error"] == "BAD_REQUEST"
    r = requests.get(server.url + "/v2/whatever", timeout=10)
    assert r.status_code == 404 and r.json()["error"] == "NOT_FOUND"


def test_audio_path_matches_mel_path(server):
    x = synth_clip("yes", np.random.default_rng(3))
    pcm = pcm16(x)
    client = QuanvClient(server.url)
    mel = client.mel(pcm)
    assert mel.shape == (60, 63)
    via_audio = client.encode(EncodeRequest("kws-2x2", 2, pcm16=pcm))
    via_mel = client.encode(EncodeRequest("kws-2x2", 2, mel=mel))
    assert np.abs(via_audio - via_mel).max() < 1e-9


def test_mel_endpoint_matches_library(server):
    pcm = pcm16(dsp.tone(440.0) * 0.5)
    remote = QuanvClient(server.url).mel(pcm)
    np.testing.assert_array_equal(remote, dsp.mel_spectrogram(dsp.pcm16_to_clip(pcm)))


def test_idempotent(server):
    mel = np.random.default_rng(4).random((60, 20))
    body = EncodeRequest("kws-3x3", 3, mel=mel).to_json()
    a = requests.post(server.url + "/v1/encode", json=body, timeout=10).content
    b = requests.post(server.url + "/v1/encode", json=body, timeout=10).content
    assert a == b


def test_noisy_model_flags_nondeterministic(server):
    mel = np.random.default_rng(5).random((60, 4))
    r = requests.post(server.url + "/v1/encode",
                      json=EncodeRequest("noisy-2x2", 2, mel=mel).to_json(), timeout=30).json()
    assert r["deterministic"] is False
    assert all(-1 <= v <= 1 for v in r["features"])


def test_no_secrets_in_client_visible_bytes(server, registry, caplog):
    caplog.set_level(logging.DEBUG)
    secrets = secrets_of(registry)
    rng = np.random.default_rng(6)
    seen = []
    r = requests.get(server.url + "/v1/health", timeout=10)
    seen.append(r.content + str(r.headers).encode())
    for mid, k in (("kws-2x2", 2), ("kws-3x3", 3), ("noisy-2x2", 2)):
        body = EncodeRequest(mid, k, mel=rng.random((60, 16))).to_json()
        r = requests.post(server.url + "/v1/encode", json=body, timeout=30)
        seen.append(r.content + str(r.headers).encode())
    r = requests.post(server.url + "/v1/encode", json={"model_id": "x"}, timeout=10)
    seen.append(r.content + str(r.headers).encode())
    blob = b"\n".join(seen).decode() + "\n" + caplog.text
    for s in secrets:
        assert s not in blob


def test_sixteen_concurrent_requests(server):
    rng = np.random.default_rng(7)
    mels = [rng.random((60, 63)) for _ in range(16)]
    client = QuanvClient(server.url)

    def call(mel):
        return client.encode(EncodeRequest("kws-2x2", 2, mel=mel))

    with ThreadPoolExecutor(16) as pool:
        results = list(pool.map(call, mels))
    for mel, fm in zip(mels, results):
        np.testing.assert_array_equal(fm, quanv_encode(normalize(mel), QuanvConfig(kernel=2, circuit_seed=SECRET_SEED)))


def test_port_busy(server, registry):
    port = server.server_address[1]
    with pytest.raises(StartupError):
        make_server("127.0.0.1", port, registry)


def test_transport_error_is_retryable():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    client = QuanvClient(f"http://127.0.0.1:{port}", timeout=1, retries=1, backoff=0)
    with pytest.raises(TransportError) as err:
        client.health()
    assert err.value.retryable


def test_handle_encode_without_http(registry):
    doc = handle_encode({"model_id": "kws-3x3", "kernel": 3, "mel": [[0.5] * 7] * 60}, registry)
    assert (doc["rows"], doc["cols"], doc["channels"]) == (20, 3, 9)
    assert len(doc["features"]) == 20 * 3 * 9


def test_registry_load(tmp_path):
    p = tmp_path / "r.json"
    p.write_text('{"models": {"a": {"seed": 1, "kernel": 1, "n_gates": 3}}}')
    reg = Registry.load(p)
    assert reg.ids() == ["a"] and len(reg["a"].circuit) == 3
    p.write_text('{"models": {"a": {"kernel": 2}}}')
    with pytest.raises(StartupError):
        Registry.load(p)
