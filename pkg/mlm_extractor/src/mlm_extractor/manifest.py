"""Extraction manifests and request identity.

A request id is the SHA-256 of its canonical JSON: UTF-8, sorted keys, no
whitespace, fields masked_positions / model_id / words. The probing side
computes ids the same way, so archives written here are addressable there
without any shared code.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError


@dataclass(frozen=True)
class Request:
    words: tuple[str, ...]
    masked_positions: tuple[int, ...]
    model_id: str

    def __post_init__(self):
        if not self.words:
            raise ManifestError("request needs at least one word")
        if tuple(sorted(set(self.masked_positions))) != self.masked_positions:
            raise ManifestError("masked_positions must be sorted and unique")
        if self.masked_positions and not (
                0 <= self.masked_positions[0]
                and self.masked_positions[-1] < len(self.words)):
            raise ManifestError("masked position outside the sentence")


def canonical_json(request: Request) -> bytes:
    obj = {
        "masked_positions": list(request.masked_positions),
        "model_id": request.model_id,
        "words": list(request.words),
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def request_id(request: Request) -> bytes:
    return hashlib.sha256(canonical_json(request)).digest()


def load_manifest(path: str | Path) -> tuple[str, list[Request]]:
    """Read a manifest and verify every stored id against the content."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not JSON: {exc}") from exc
    try:
        model_id = obj["model_id"]
        entries = obj["requests"]
    except (TypeError, KeyError) as exc:
        raise ManifestError(f"manifest missing field: {exc}") from exc

    requests: list[Request] = []
    seen: set[bytes] = set()
    for entry in entries:
        try:
            request = Request(words=tuple(entry["words"]),
                              masked_positions=tuple(
                                  entry["masked_positions"]),
                              model_id=model_id)
            stored = entry["id"]
        except (TypeError, KeyError) as exc:
            raise ManifestError(f"bad manifest entry: {exc}") from exc
        rid = request_id(request)
        if rid.hex() != stored:
            raise ManifestError(
                f"id mismatch for request {stored}: content hashes to "
                f"{rid.hex()}")
        if rid in seen:
            raise ManifestError(f"duplicate request id {stored}")
        seen.add(rid)
        requests.append(request)
    return model_id, requests
