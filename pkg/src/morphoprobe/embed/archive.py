"""MPEB v1 archives: bit-exact on-disk storage for layered embeddings.

Layout (all integers little-endian):

    magic "MPEB" | u32 version | u32 metadata length | metadata JSON
    then per record:
    32-byte id | u32 n_subwords | i32 alignment[n_subwords]
    | f32 values[n_layers * n_subwords * dim]  (layer-major)

The metadata JSON carries model_id, n_layers, dim, and a tokenizer label.
Archives are append-only during writing and immutable afterwards; readers
memory-map the file and are safe for concurrent use.
"""

from __future__ import annotations

import json
import mmap
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError, IntegrityError, NotFoundError
from .layered import LayeredEmbedding
from .request import EmbeddingRequest, request_hash

MAGIC = b"MPEB"
VERSION = 1
ID_SIZE = 32


class ArchiveWriter:
    def __init__(self, path: str | Path, model_id: str, n_layers: int,
                 dim: int, tokenizer: str = "unspecified",
                 extra_metadata: dict | None = None):
        self.path = Path(path)
        self.n_layers = n_layers
        self.dim = dim
        self._fh = open(self.path, "wb")
        meta = dict(extra_metadata or {})
        meta.update({"model_id": model_id, "n_layers": n_layers, "dim": dim,
                     "tokenizer": tokenizer})
        blob = json.dumps(meta, ensure_ascii=False, sort_keys=True,
                          separators=(",", ":")).encode("utf-8")
        self._fh.write(MAGIC)
        self._fh.write(struct.pack("<I", VERSION))
        self._fh.write(struct.pack("<I", len(blob)))
        self._fh.write(blob)
        self._seen: set[bytes] = set()

    def add(self, record_id: bytes, embedding: LayeredEmbedding) -> None:
        if len(record_id) != ID_SIZE:
            raise DataError(f"record id must be {ID_SIZE} bytes")
        if record_id in self._seen:
            raise DataError(f"duplicate record id {record_id.hex()}")
        if embedding.n_layers != self.n_layers or embedding.dim != self.dim:
            raise IntegrityError(
                f"record dims ({embedding.n_layers}, {embedding.dim}) do not "
                f"match archive ({self.n_layers}, {self.dim})")
        self._seen.add(record_id)
        self._fh.write(record_id)
        self._fh.write(struct.pack("<I", embedding.n_subwords))
        self._fh.write(embedding.subword_token_map.astype("<i4").tobytes())
        self._fh.write(embedding.values.astype("<f4").tobytes())

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_archive(path: str | Path, model_id: str, n_layers: int, dim: int,
                  records, tokenizer: str = "unspecified",
                  extra_metadata: dict | None = None) -> None:
    """records: iterable of (32-byte id, LayeredEmbedding)."""
    with ArchiveWriter(path, model_id, n_layers, dim, tokenizer,
                       extra_metadata) as writer:
        for record_id, embedding in records:
            writer.add(record_id, embedding)


class ArchiveReader:
    """Memory-mapped MPEB reader implementing the embed() contract."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "rb")
        try:
            self._mm = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        except ValueError as exc:  # zero-length file
            raise DataError(f"not an MPEB archive: {self.path}: {exc}") from exc
        self.metadata = self._parse_header()
        self.model_id = self.metadata["model_id"]
        self.n_layers = int(self.metadata["n_layers"])
        self.dim = int(self.metadata["dim"])
        self._index = self._scan()

    def _parse_header(self) -> dict:
        mm = self._mm
        if mm[:4] != MAGIC:
            raise DataError(f"bad magic in {self.path}: {bytes(mm[:4])!r}")
        version, = struct.unpack_from("<I", mm, 4)
        if version != VERSION:
            raise DataError(f"unsupported MPEB version {version}")
        meta_len, = struct.unpack_from("<I", mm, 8)
        blob = bytes(mm[12:12 + meta_len])
        try:
            meta = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"bad archive metadata: {exc}") from exc
        for key in ("model_id", "n_layers", "dim"):
            if key not in meta:
                raise DataError(f"archive metadata missing {key!r}")
        self._data_start = 12 + meta_len
        return meta

    def _scan(self) -> dict[bytes, tuple[int, int]]:
        """Map record id -> (offset of alignment array, n_subwords)."""
        index: dict[bytes, tuple[int, int]] = {}
        mm, pos, size = self._mm, self._data_start, len(self._mm)
        record_float_bytes = 4 * self.n_layers * self.dim
        while pos < size:
            if pos + ID_SIZE + 4 > size:
                raise DataError(f"truncated record header at offset {pos}")
            record_id = bytes(mm[pos:pos + ID_SIZE])
            n_subwords, = struct.unpack_from("<I", mm, pos + ID_SIZE)
            body = pos + ID_SIZE + 4
            end = body + 4 * n_subwords + record_float_bytes * n_subwords
            if end > size:
                raise DataError(f"truncated record {record_id.hex()} at {pos}")
            index[record_id] = (body, n_subwords)
            pos = end
        return index

    def __len__(self) -> int:
        return len(self._index)

    @property
    def ids(self) -> list[bytes]:
        return list(self._index)

    def get(self, record_id: bytes) -> LayeredEmbedding:
        entry = self._index.get(record_id)
        if entry is None:
            raise NotFoundError(f"not_found({record_id.hex()})")
        body, n_subwords = entry
        tmap = np.frombuffer(self._mm, dtype="<i4", count=n_subwords,
                             offset=body).copy()
        values = np.frombuffer(
            self._mm, dtype="<f4",
            count=self.n_layers * n_subwords * self.dim,
            offset=body + 4 * n_subwords).copy()
        return LayeredEmbedding(
            n_layers=self.n_layers, n_subwords=n_subwords, dim=self.dim,
            values=values.reshape(self.n_layers, n_subwords, self.dim),
            subword_token_map=tmap)

    def embed(self, request: EmbeddingRequest) -> LayeredEmbedding:
        if request.model_id != self.model_id:
            raise IntegrityError(
                f"request model_id {request.model_id!r} does not match "
                f"archive model_id {self.model_id!r}")
        return self.get(request_hash(request))

    def close(self) -> None:
        self._mm.close()
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def build_static_archive(path: str | Path, model_id: str, dim: int,
                         word_vectors: dict[str, np.ndarray],
                         tokenizer: str = "word-identity") -> None:
    """One-layer archive of per-word vectors (fastText-style baselines).

    Each word is stored as the embedding of the single-word unmasked
    request, so any backend can look words up through the normal contract.
    """
    def records():
        for word in sorted(word_vectors):
            vec = np.asarray(word_vectors[word], dtype=np.float32)
            if vec.shape != (dim,):
                raise DataError(
                    f"vector for {word!r} has shape {vec.shape}, "
                    f"expected ({dim},)")
            request = EmbeddingRequest(words=(word,), masked_positions=(),
                                       model_id=model_id)
            yield request_hash(request), LayeredEmbedding(
                n_layers=1, n_subwords=1, dim=dim,
                values=vec.reshape(1, 1, dim),
                subword_token_map=np.zeros(1, dtype=np.int32))
    write_archive(path, model_id, 1, dim, records(), tokenizer=tokenizer)


def lookup_static_vector(reader: ArchiveReader, word: str) -> np.ndarray:
    """Fetch a word vector from a static (one-layer) archive."""
    request = EmbeddingRequest(words=(word,), masked_positions=(),
                               model_id=reader.model_id)
    return reader.embed(request).values[0, 0, :]
