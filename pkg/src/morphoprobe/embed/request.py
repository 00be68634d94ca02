"""Embedding requests, content hashing, and extraction-manifest planning.

A request is identified by the SHA-256 of its canonical JSON (UTF-8, sorted
keys, no whitespace). Masked positions appear both in `masked_positions`
and as the mask sentinel inside `words`, so two maskings that produce the
same visible sequence deduplicate to the same id.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError
from ..perturb import (PerturbedInstance, PerturbationSpec, mask_dataset)
from ..sampler import TaskDataset


@dataclass(frozen=True)
class EmbeddingRequest:
    words: tuple[str, ...]
    masked_positions: tuple[int, ...]   # sorted, 0-based
    model_id: str

    def __post_init__(self):
        if tuple(sorted(set(self.masked_positions))) != self.masked_positions:
            raise DataError("masked_positions must be sorted and unique")
        if self.masked_positions and not (
                0 <= self.masked_positions[0]
                and self.masked_positions[-1] < len(self.words)):
            raise DataError("masked position outside the sentence")


def canonical_json(request: EmbeddingRequest) -> bytes:
    obj = {
        "masked_positions": list(request.masked_positions),
        "model_id": request.model_id,
        "words": list(request.words),
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def request_hash(request: EmbeddingRequest) -> bytes:
    """32-byte content id of a request."""
    return hashlib.sha256(canonical_json(request)).digest()


def request_from_perturbed(perturbed: PerturbedInstance,
                           model_id: str) -> EmbeddingRequest:
    return EmbeddingRequest(words=perturbed.words,
                            masked_positions=perturbed.masked_positions,
                            model_id=model_id)


@dataclass
class ExtractionManifest:
    model_id: str
    requests: list[EmbeddingRequest]

    def __post_init__(self):
        ids = [request_hash(r) for r in self.requests]
        if len(set(ids)) != len(ids):
            raise DataError("manifest contains duplicate request ids")

    @property
    def ids(self) -> list[bytes]:
        return [request_hash(r) for r in self.requests]


def plan_manifest(dataset: TaskDataset,
                  maskings: list[PerturbationSpec | frozenset],
                  model_id: str, master_seed: int = 0) -> ExtractionManifest:
    """Every (instance, masking) pair across all three splits, deduplicated
    by content hash in first-seen order."""
    seen: set[bytes] = set()
    requests: list[EmbeddingRequest] = []
    for masking in maskings:
        per_split = mask_dataset(dataset, masking, master_seed)
        for split in ("train", "dev", "test"):
            for perturbed in per_split[split]:
                req = request_from_perturbed(perturbed, model_id)
                rid = request_hash(req)
                if rid not in seen:
                    seen.add(rid)
                    requests.append(req)
    return ExtractionManifest(model_id=model_id, requests=requests)


def save_manifest(manifest: ExtractionManifest, path: str | Path) -> None:
    obj = {
        "model_id": manifest.model_id,
        "requests": [
            {"id": request_hash(r).hex(), "words": list(r.words),
             "masked_positions": list(r.masked_positions)}
            for r in manifest.requests
        ],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | Path) -> ExtractionManifest:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    requests = []
    for entry in obj["requests"]:
        req = EmbeddingRequest(words=tuple(entry["words"]),
                               masked_positions=tuple(entry["masked_positions"]),
                               model_id=obj["model_id"])
        if request_hash(req).hex() != entry["id"]:
            raise DataError(f"manifest id mismatch for {entry['id']}")
        requests.append(req)
    return ExtractionManifest(model_id=obj["model_id"], requests=requests)
