"""MPEB v1 archive writer.

Layout, all integers little-endian:

    magic "MPEB" | u32 version | u32 metadata length | metadata JSON
    then per record:
    32-byte id | u32 n_subwords | i32 alignment[n_subwords]
    | f32 values[n_layers * n_subwords * dim]  (layer-major)

Metadata carries at least model_id, n_layers, dim, and a tokenizer label;
extra keys (mode, reinit seed, unknown-token fallbacks) ride along.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ExtractorError

MAGIC = b"MPEB"
VERSION = 1
ID_SIZE = 32


class MpebWriter:
    def __init__(self, path: str | Path, model_id: str, n_layers: int,
                 dim: int, tokenizer: str,
                 extra_metadata: dict | None = None):
        self.path = Path(path)
        self.n_layers = int(n_layers)
        self.dim = int(dim)
        meta = dict(extra_metadata or {})
        meta.update({"model_id": model_id, "n_layers": self.n_layers,
                     "dim": self.dim, "tokenizer": tokenizer})
        blob = json.dumps(meta, ensure_ascii=False, sort_keys=True,
                          separators=(",", ":")).encode("utf-8")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "wb")
        self._fh.write(MAGIC)
        self._fh.write(struct.pack("<I", VERSION))
        self._fh.write(struct.pack("<I", len(blob)))
        self._fh.write(blob)
        self._seen: set[bytes] = set()
        self.n_records = 0

    def add(self, record_id: bytes, values: np.ndarray,
            alignment: np.ndarray) -> None:
        """values: [n_layers, n_subwords, dim] float32; alignment maps each
        subword to its word index, -1 for special symbols."""
        if len(record_id) != ID_SIZE:
            raise ExtractorError(f"record id must be {ID_SIZE} bytes")
        if record_id in self._seen:
            raise ExtractorError(f"duplicate record id {record_id.hex()}")
        values = np.asarray(values)
        alignment = np.asarray(alignment)
        n_subwords = alignment.shape[0]
        if values.shape != (self.n_layers, n_subwords, self.dim):
            raise ExtractorError(
                f"tensor shape {values.shape} does not match "
                f"({self.n_layers}, {n_subwords}, {self.dim})")
        self._seen.add(record_id)
        self._fh.write(record_id)
        self._fh.write(struct.pack("<I", n_subwords))
        self._fh.write(alignment.astype("<i4").tobytes())
        self._fh.write(values.astype("<f4").tobytes())
        self.n_records += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
