"""Embedding provider: a uniform contract for per-layer contextual vectors.

Backends: MPEB archives (bit-exact storage), an HTTP client for a live
extraction service, and seeded random controls. A read-through cache and an
extraction-manifest planner round out the module.
"""

from .request import (EmbeddingRequest, ExtractionManifest, canonical_json,
                      request_hash, request_from_perturbed, plan_manifest,
                      save_manifest, load_manifest)
from .layered import LayeredEmbedding, pool_subwords, fertility
from .archive import (ArchiveWriter, ArchiveReader, write_archive,
                      build_static_archive, MAGIC, VERSION)
from .random_backend import RandomControlBackend
from .http_backend import HttpBackend, CachingProvider

__all__ = [
    "EmbeddingRequest", "ExtractionManifest", "canonical_json",
    "request_hash", "request_from_perturbed", "plan_manifest",
    "save_manifest", "load_manifest",
    "LayeredEmbedding", "pool_subwords", "fertility",
    "ArchiveWriter", "ArchiveReader", "write_archive",
    "build_static_archive", "MAGIC", "VERSION",
    "RandomControlBackend", "HttpBackend", "CachingProvider",
]
