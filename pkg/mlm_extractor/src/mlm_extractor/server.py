"""HTTP embedding service over a loaded extractor.

POST /v1/embed with {"model_id", "words", "masked_positions"} returns
{"n_layers", "dim", "subword_token_map", "vectors_b64"}; GET /v1/model
returns {"model_id", "n_layers", "dim"}. 400 marks a malformed request,
404 a model this service does not hold, 503 (with Retry-After) overload.

Requests are handled concurrently but inference is serialized behind a
lock: one sequence per forward pass is the determinism contract shared
with extract(), so a served tensor is bit-identical to an archived one.
"""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .errors import ManifestError
from .manifest import Request
from .modeling import Extractor

MAX_BODY = 1 << 20


class EmbedService(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, extractor: Extractor, max_inflight: int = 4,
                 retry_after: float = 0.5):
        super().__init__(address, _Handler)
        self.extractor = extractor
        self.slots = threading.Semaphore(max_inflight)
        self.retry_after = retry_after
        self.inference_lock = threading.Lock()


class _Handler(BaseHTTPRequestHandler):
    server: EmbedService
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):  # quiet by default; stderr noise in tests
        pass

    def _reply(self, status: int, payload: dict,
               headers: dict | None = None) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for name, value in (headers or {}).items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path != "/v1/model":
            self._reply(404, {"error": f"no such endpoint {self.path}"})
            return
        extractor = self.server.extractor
        self._reply(200, {"model_id": extractor.config.model_id,
                          "n_layers": extractor.n_layers,
                          "dim": extractor.dim})

    def do_POST(self) -> None:
        if self.path != "/v1/embed":
            self._reply(404, {"error": f"no such endpoint {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._reply(400, {"error": "missing Content-Length"})
            return
        if not (0 <= length <= MAX_BODY):
            self._reply(400, {"error": "body too large"})
            return
        try:
            obj = json.loads(self.rfile.read(length).decode("utf-8"))
            words = obj["words"]
            masked = obj["masked_positions"]
            model_id = obj["model_id"]
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError,
                TypeError) as exc:
            self._reply(400, {"error": f"malformed request: {exc}"})
            return
        if (not isinstance(words, list)
                or not all(isinstance(w, str) for w in words)
                or not isinstance(masked, list)
                or not all(isinstance(m, int) for m in masked)
                or not isinstance(model_id, str)):
            self._reply(400, {"error": "malformed request: bad field types"})
            return
        extractor = self.server.extractor
        if model_id != extractor.config.model_id:
            self._reply(404, {"error": f"unknown model {model_id!r}"})
            return
        try:
            request = Request(words=tuple(words),
                              masked_positions=tuple(masked),
                              model_id=model_id)
        except ManifestError as exc:
            self._reply(400, {"error": str(exc)})
            return

        if not self.server.slots.acquire(blocking=False):
            self._reply(503, {"error": "over capacity"},
                        {"Retry-After": f"{self.server.retry_after}"})
            return
        try:
            with self.server.inference_lock:
                values, alignment, _ = extractor.embed_request(request)
        except Exception as exc:
            self._reply(400, {"error": str(exc)})
            return
        finally:
            self.server.slots.release()

        payload = base64.b64encode(
            np.ascontiguousarray(values, dtype="<f4").tobytes()
        ).decode("ascii")
        self._reply(200, {"n_layers": extractor.n_layers,
                          "dim": extractor.dim,
                          "subword_token_map": [int(x) for x in alignment],
                          "vectors_b64": payload})


def make_server(extractor: Extractor, host: str = "127.0.0.1",
                port: int = 0, max_inflight: int = 4,
                retry_after: float = 0.5) -> EmbedService:
    return EmbedService((host, port), extractor, max_inflight=max_inflight,
                        retry_after=retry_after)
