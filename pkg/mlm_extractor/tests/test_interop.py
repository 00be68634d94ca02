"""Cross-package contract: the probing side must consume this extractor's
output through its archive reader and HTTP client with no glue code.

Covers the shipping criterion end to end: a 20-sentence manifest written by
the consumer is extracted here, read back by the consumer's archive reader
with zero validation errors, fertility agrees exactly on both sides, and
the HTTP service returns byte-identical tensors to the archive.
"""

import threading

import numpy as np
import pytest

from morphoprobe.embed.archive import ArchiveReader
from morphoprobe.embed.http_backend import HttpBackend
from morphoprobe.embed.layered import fertility as consumer_fertility
from morphoprobe.embed.request import (EmbeddingRequest, ExtractionManifest,
                                       save_manifest)

from mlm_extractor.alignment import fertility as producer_fertility
from mlm_extractor.alignment import tokenize_words
from mlm_extractor.extract import extract
from mlm_extractor.server import make_server

from conftest import criterion

WORDS = ["the", "cat", "dog", "bird", "sun", "moon", "run", "runs",
         "blip", "grok", "zest", "plim", "fur", "paw"]


def _sentences():
    """20 deterministic sentences with a target word each; even indices
    mask the target, the way probing maskings do."""
    out = []
    for i in range(20):
        length = 3 + (i % 5)
        words = tuple(WORDS[(i * 3 + j) % len(WORDS)] for j in range(length))
        target = i % length
        masked = (target,) if i % 2 == 0 else ()
        out.append((words, target, masked))
    return out


@pytest.fixture(scope="module")
def archive(tmp_path_factory, config, extractor):
    root = tmp_path_factory.mktemp("interop")
    requests = [EmbeddingRequest(words=words, masked_positions=masked,
                                 model_id="tiny")
                for words, _, masked in _sentences()]
    manifest = ExtractionManifest(model_id="tiny", requests=requests)
    manifest_path = root / "manifest.json"
    save_manifest(manifest, manifest_path)

    out_path = root / "embeddings.mpeb"
    n = extract(manifest_path, config, out_path, extractor=extractor)
    assert n == 20
    return manifest, out_path


def test_archive_interop(archive, extractor, tokenizer):
    manifest, out_path = archive
    sentences = _sentences()

    with criterion("archive_interop"), ArchiveReader(out_path) as reader:
        assert reader.model_id == "tiny"
        assert (reader.n_layers, reader.dim) == (extractor.n_layers,
                                                 extractor.dim)
        assert len(reader) == 20

        # consumer reads every record with zero validation errors
        embeddings = []
        for request in manifest.requests:
            embedding = reader.embed(request)
            assert embedding.validate(request) == []
            embeddings.append(embedding)

        # fertility agrees exactly between the two implementations
        consumer_records = [
            (emb.subword_token_map, len(req.words), target)
            for emb, req, (_, target, _) in zip(embeddings, manifest.requests,
                                                sentences)
        ]
        producer_records = []
        for words, target, masked in sentences:
            _, alignment, _ = tokenize_words(tokenizer, words, masked)
            producer_records.append((alignment, len(words), target))
        assert consumer_fertility(consumer_records) == \
            producer_fertility(producer_records)

        # serve and extract are byte-identical for the same requests
        server = make_server(extractor)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            host, port = server.server_address[:2]
            backend = HttpBackend(f"http://{host}:{port}", model_id="tiny")
            for request, stored in zip(manifest.requests, embeddings):
                served = backend.embed(request)
                assert np.array_equal(served.subword_token_map,
                                      stored.subword_token_map)
                assert served.values.tobytes() == stored.values.tobytes()
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)
