"""Manifest -> MPEB archive extraction."""

from __future__ import annotations

from pathlib import Path

from .alignment import tokenize_words
from .config import ExtractorConfig
from .errors import ManifestError
from .manifest import load_manifest, request_id
from .modeling import Extractor
from .mpeb import MpebWriter


def extract(manifest_path: str | Path, config: ExtractorConfig,
            out_path: str | Path,
            extractor: Extractor | None = None) -> int:
    """Embed every manifest request into an MPEB archive; returns the
    record count. An empty manifest still yields a valid archive.

    Metadata (and hence unknown-token fallback flags, recorded as
    {"unk_fallbacks": {request_id_hex: [word positions]}}) precedes the
    records on disk, so fallbacks are collected in a tokenize-only first
    pass and the heavy forward passes stream straight to the file.
    """
    model_id, requests = load_manifest(manifest_path)
    if model_id != config.model_id:
        raise ManifestError(
            f"manifest is for model {model_id!r}, extractor is configured "
            f"as {config.model_id!r}")
    extractor = extractor or Extractor(config)

    fallback_log: dict[str, list[int]] = {}
    for request in requests:
        _, _, fallbacks = tokenize_words(
            extractor.tokenizer, request.words, request.masked_positions)
        if fallbacks:
            fallback_log[request_id(request).hex()] = fallbacks

    extra = {"mode": config.mode, "unk_fallbacks": fallback_log}
    if config.mode != "pretrained":
        extra["reinit_seed"] = config.reinit_seed
    with MpebWriter(out_path, model_id=config.model_id,
                    n_layers=extractor.n_layers, dim=extractor.dim,
                    tokenizer=type(extractor.tokenizer).__name__,
                    extra_metadata=extra) as writer:
        for request in requests:
            values, alignment, _ = extractor.embed_request(request)
            writer.add(request_id(request), values, alignment)
        return writer.n_records
