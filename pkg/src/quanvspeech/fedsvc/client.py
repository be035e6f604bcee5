"""Client side of the split: up-stream audio or Mel, down-stream features."""

from __future__ import annotations

import base64
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import requests

from ..exceptions import InvalidArgumentError, RemoteError, TransportError


@dataclass(frozen=True)
class EncodeRequest:
    """One of ``pcm16`` (int16 samples) or ``mel`` (bands x frames) must be set."""

    model_id: str
    kernel: int
    pcm16: Optional[np.ndarray] = None
    mel: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.pcm16 is None) == (self.mel is None):
            raise InvalidArgumentError("exactly one of pcm16 or mel must be given")

    def to_json(self):
        body = {"model_id": self.model_id, "kernel": int(self.kernel)}
        if self.pcm16 is not None:
            raw = np.asarray(self.pcm16, dtype="<i2").tobytes()
            body["audio"] = base64.b64encode(raw).decode("ascii")
        else:
            body["mel"] = np.asarray(self.mel, dtype=float).tolist()
        return body


class QuanvClient:
    """Thin ``requests`` wrapper.

    Connection failures, timeouts and 5xx answers are retried ``retries``
    times with linear backoff and then surface as :class:`TransportError`.
    4xx answers raise :class:`RemoteError` immediately.
    """

    def __init__(self, base_url, timeout=60.0, retries=2, backoff=0.2, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()

    def _call(self, method, path, body=None):
        url = self.base_url + path
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.request(method, url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last = TransportError(f"{method} {url}: {exc}")
            else:
                if resp.status_code < 400:
                    try:
                        return resp.json()
                    except ValueError:
                        raise TransportError(f"{method} {url}: response is not JSON") from None
                try:
                    err = resp.json()
                    code, detail = err["error"], err.get("detail", "")
                except (ValueError, KeyError, TypeError):
                    code, detail = f"HTTP_{resp.status_code}", resp.text[:200]
                if resp.status_code < 500:
                    raise RemoteError(code, detail, resp.status_code)
                last = TransportError(f"{method} {url}: server error {code}: {detail}")
            if attempt < self.retries:
                time.sleep(self.backoff * (attempt + 1))
        raise last

    def health(self):
        return self._call("GET", "/v1/health")

    def mel(self, pcm16):
        raw = np.asarray(pcm16, dtype="<i2").tobytes()
        doc = self._call("POST", "/v1/mel", {"audio": base64.b64encode(raw).decode("ascii")})
        return np.asarray(doc["mel"], dtype=float)

    def encode(self, request):
        doc = self._call("POST", "/v1/encode", request.to_json())
        rows, cols, channels = int(doc["rows"]), int(doc["cols"]), int(doc["channels"])
        features = np.asarray(doc["features"], dtype=float)
        if features.shape != (rows * cols * channels,):
            raise TransportError("feature payload does not match its declared dimensions")
        return features.reshape(rows, cols, channels)


def encode_remote(client, request):
    """Feature map for ``request`` computed by the server."""
    return client.encode(request)
