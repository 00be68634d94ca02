"""HTTP embedding client and an in-process read-through cache.

Protocol: POST /v1/embed with JSON {"model_id", "words", "masked_positions"}
returns {"n_layers", "dim", "subword_token_map", "vectors_b64"} where
vectors_b64 is base64 of the little-endian float32 tensor in layer-major
order; GET /v1/model returns {"model_id", "n_layers", "dim"}. 400 marks a
malformed request, 404 an unknown model, 503 an overloaded service.
"""

from __future__ import annotations

import base64
import json
import threading
import time
import urllib.error
import urllib.request

import numpy as np

from ..errors import IntegrityError, TransportError
from .layered import LayeredEmbedding
from .request import EmbeddingRequest, request_hash


class HttpBackend:
    def __init__(self, base_url: str, model_id: str | None = None,
                 timeout: float = 30.0, max_retries: int = 2,
                 max_inflight: int = 8, retry_backoff: float = 0.2):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.retry_backoff = retry_backoff
        self._inflight = threading.Semaphore(max_inflight)
        info = self.model_info()
        self.model_id = info["model_id"]
        self.n_layers = int(info["n_layers"])
        self.dim = int(info["dim"])
        if model_id is not None and model_id != self.model_id:
            raise IntegrityError(
                f"service reports model {self.model_id!r}, expected "
                f"{model_id!r}")

    def _request(self, url: str, body: bytes | None = None) -> dict:
        last: TransportError | None = None
        for attempt in range(1, self.max_retries + 2):
            try:
                req = urllib.request.Request(
                    url, data=body,
                    headers={"Content-Type": "application/json"} if body else {})
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as exc:
                retry_after = None
                header = exc.headers.get("Retry-After") if exc.headers else None
                if header is not None:
                    try:
                        retry_after = float(header)
                    except ValueError:
                        retry_after = None
                last = TransportError(
                    f"HTTP {exc.code} from {url}: {exc.reason}",
                    status=exc.code, retry_after=retry_after, attempts=attempt)
                if exc.code != 503:
                    raise last from exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last = TransportError(f"cannot reach {url}: {exc}",
                                      attempts=attempt)
            if attempt <= self.max_retries:
                delay = (last.retry_after if last and last.retry_after
                         else self.retry_backoff * attempt)
                time.sleep(delay)
        raise last

    def model_info(self) -> dict:
        return self._request(f"{self.base_url}/v1/model")

    def embed(self, request: EmbeddingRequest) -> LayeredEmbedding:
        if request.model_id != self.model_id:
            raise IntegrityError(
                f"request model_id {request.model_id!r} != service "
                f"{self.model_id!r}")
        body = json.dumps({
            "model_id": request.model_id,
            "words": list(request.words),
            "masked_positions": list(request.masked_positions),
        }, ensure_ascii=False).encode("utf-8")
        with self._inflight:
            obj = self._request(f"{self.base_url}/v1/embed", body)
        n_layers, dim = int(obj["n_layers"]), int(obj["dim"])
        if (n_layers, dim) != (self.n_layers, self.dim):
            raise IntegrityError(
                f"response dims ({n_layers}, {dim}) != service "
                f"({self.n_layers}, {self.dim})")
        tmap = np.asarray(obj["subword_token_map"], dtype=np.int32)
        raw = base64.b64decode(obj["vectors_b64"])
        expected = 4 * n_layers * tmap.size * dim
        if len(raw) != expected:
            raise IntegrityError(
                f"vector payload is {len(raw)} bytes, expected {expected}")
        values = np.frombuffer(raw, dtype="<f4").reshape(
            n_layers, tmap.size, dim)
        return LayeredEmbedding(n_layers=n_layers, n_subwords=tmap.size,
                                dim=dim, values=values,
                                subword_token_map=tmap)


class CachingProvider:
    """Read-through cache keyed by request hash, safe under concurrent use.

    Fronts any backend with an embed() method; archives remain the durable
    cache, this one only dedups within a process.
    """

    def __init__(self, backend, capacity: int | None = None):
        self.backend = backend
        self.capacity = capacity
        self.model_id = backend.model_id
        self.n_layers = getattr(backend, "n_layers", None)
        self.dim = getattr(backend, "dim", None)
        self._store: dict[bytes, LayeredEmbedding] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def embed(self, request: EmbeddingRequest) -> LayeredEmbedding:
        key = request_hash(request)
        with self._lock:
            cached = self._store.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        value = self.backend.embed(request)
        with self._lock:
            self.misses += 1
            if self.capacity is not None and len(self._store) >= self.capacity:
                self._store.pop(next(iter(self._store)))
            self._store[key] = value
        return value
