"""HTTP/1.1 + JSON extraction server.

Endpoints::

    GET  /v1/health   -> {"status": "ok", "models": [{"model_id", "kernel"}, ...]}
    POST /v1/mel      {"audio": <base64 PCM16 LE>}            -> {"bands", "frames", "mel"}
    POST /v1/encode   {"model_id", "kernel", "mel" | "audio"}  -> {"model_id", "rows",
                      "cols", "channels", "features", "deterministic"}

Errors come back as ``{"error": CODE, "detail": str}``.  Nothing in a
response or a log line refers to circuit seeds or gate angles.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .. import dsp
from ..exceptions import QuanvError, StartupError
from ..quanv import normalize, quanv_encode

log = logging.getLogger(__name__)

MAX_BODY = 16 * 1024 * 1024
MAX_FRAMES = 4096


class ServiceError(Exception):
    def __init__(self, status, code, detail):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


def _validation(detail):
    return ServiceError(400, "VALIDATION_ERROR", detail)


def _decode_audio(payload):
    if not isinstance(payload, str):
        raise _validation("audio must be a base64 string of PCM16 little-endian samples")
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError):
        raise _validation("audio is not valid base64") from None
    if len(raw) % 2:
        raise _validation("audio byte length must be even (PCM16)")
    if not raw:
        raise _validation("audio is empty")
    return dsp.pcm16_to_clip(np.frombuffer(raw, dtype="<i2"))


def _decode_mel(payload):
    if not isinstance(payload, list) or not payload:
        raise _validation("mel must be a non-empty list of band rows")
    if len(payload) != dsp.N_MELS:
        raise _validation(f"mel must have {dsp.N_MELS} bands, got {len(payload)}")
    if not all(isinstance(r, list) for r in payload):
        raise _validation("mel rows must be lists of numbers")
    frames = len(payload[0])
    if frames == 0 or frames > MAX_FRAMES or any(len(r) != frames for r in payload):
        raise _validation(f"mel rows must share one length in [1, {MAX_FRAMES}]")
    try:
        mel = np.array(payload, dtype=float)
    except (TypeError, ValueError):
        raise _validation("mel entries must be numbers") from None
    if not np.all(np.isfinite(mel)):
        raise _validation("mel entries must be finite")
    return mel


def handle_mel(body):
    if not isinstance(body, dict) or "audio" not in body:
        raise _validation("request needs an 'audio' field")
    mel = dsp.mel_spectrogram(_decode_audio(body["audio"]))
    return {"bands": mel.shape[0], "frames": mel.shape[1], "mel": mel.tolist()}


def handle_encode(body, registry):
    """Validate an encode request and compute its features."""
    if not isinstance(body, dict):
        raise _validation("request body must be a JSON object")
    model_id = body.get("model_id")
    if not isinstance(model_id, str):
        raise _validation("model_id must be a string")
    if model_id not in registry:
        raise ServiceError(404, "MODEL_NOT_FOUND", f"no model named {model_id!r}")
    entry = registry[model_id]
    kernel = body.get("kernel")
    if kernel is not None and kernel != entry.kernel:
        raise _validation(f"model {model_id!r} uses kernel {entry.kernel}, request asked for {kernel}")
    has_mel = body.get("mel") is not None
    has_audio = body.get("audio") is not None
    if has_mel == has_audio:
        raise _validation("exactly one of 'mel' or 'audio' must be given")
    if has_audio:
        mel = dsp.mel_spectrogram(_decode_audio(body["audio"]))
    else:
        mel = _decode_mel(body["mel"])
    fm = quanv_encode(normalize(mel), entry.config, entry.circuit)
    rows, cols, channels = fm.shape
    return {
        "model_id": model_id,
        "rows": rows,
        "cols": cols,
        "channels": channels,
        "features": fm.reshape(-1).tolist(),
        "deterministic": entry.config.analytic,
    }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "quanv/1"
    sys_version = ""

    def log_message(self, fmt, *args):
        pass

    def _send(self, status, doc):
        data = json.dumps(doc, allow_nan=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)
        log.info("%s %s %d", self.command, self.path, status)

    def _error(self, err):
        self._send(err.status, {"error": err.code, "detail": err.detail})

    def _read_json(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            raise ServiceError(400, "BAD_REQUEST", "invalid Content-Length") from None
        if length <= 0:
            raise ServiceError(400, "BAD_REQUEST", "request body required")
        if length > MAX_BODY:
            raise ServiceError(413, "PAYLOAD_TOO_LARGE", f"body exceeds {MAX_BODY} bytes")
        raw = self.rfile.read(length)
        try:
            return json.loads(raw)
        except ValueError:
            raise ServiceError(400, "BAD_REQUEST", "body is not valid JSON") from None

    def do_GET(self):
        if self.path == "/v1/health":
            self._send(200, {"status": "ok", "models": self.server.registry.public_listing()})
        else:
            self._error(ServiceError(404, "NOT_FOUND", f"no route for GET {self.path}"))

    def do_POST(self):
        routes = {
            "/v1/mel": lambda b: handle_mel(b),
            "/v1/encode": lambda b: handle_encode(b, self.server.registry),
        }
        try:
            if self.path not in routes:
                # drain the body so the connection stays usable
                self.rfile.read(int(self.headers.get("Content-Length", "0") or 0))
                raise ServiceError(404, "NOT_FOUND", f"no route for POST {self.path}")
            self._send(200, routes[self.path](self._read_json()))
        except ServiceError as err:
            self._error(err)
        except QuanvError as err:
            self._error(ServiceError(400, "VALIDATION_ERROR", str(err)))
        except Exception:
            log.exception("unhandled error on %s", self.path)
            self._error(ServiceError(500, "INTERNAL", "internal server error"))


class QuanvServer(ThreadingHTTPServer):
    daemon_threads = True
    # the default of 5 is too small for bursts of concurrent clients
    request_queue_size = 64

    def __init__(self, address, registry):
        self.registry = registry
        super().__init__(address, _Handler)

    @property
    def url(self):
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start_background(self, poll_interval=0.05):
        t = threading.Thread(target=self.serve_forever, args=(poll_interval,),
                             name="quanv-server", daemon=True)
        t.start()
        return t


def make_server(host, port, registry):
    """Bind a server; raises :class:`StartupError` if the port is unavailable."""
    try:
        return QuanvServer((host, int(port)), registry)
    except OSError as exc:
        raise StartupError(f"cannot listen on {host}:{port}: {exc}") from exc


def serve(host, port, registry):
    server = make_server(host, port, registry)
    log.info("serving %d model(s) on %s", len(registry), server.url)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

