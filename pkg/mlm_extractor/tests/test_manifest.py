import hashlib
import json

import pytest

from mlm_extractor.errors import ManifestError
from mlm_extractor.manifest import Request, canonical_json, load_manifest, request_id


def test_request_id_matches_independent_hash():
    req = Request(words=("Die", "Katze"), masked_positions=(1,), model_id="m")
    payload = '{"masked_positions":[1],"model_id":"m","words":["Die","Katze"]}'
    assert canonical_json(req) == payload.encode("utf-8")
    assert request_id(req) == hashlib.sha256(payload.encode("utf-8")).digest()


def test_request_id_non_ascii_stays_utf8():
    req = Request(words=("über",), masked_positions=(), model_id="m")
    assert "über".encode("utf-8") in canonical_json(req)


def test_request_rejects_bad_masks():
    with pytest.raises(ManifestError):
        Request(words=("a", "b"), masked_positions=(2,), model_id="m")
    with pytest.raises(ManifestError):
        Request(words=("a", "b"), masked_positions=(1, 0), model_id="m")
    with pytest.raises(ManifestError):
        Request(words=("a", "b"), masked_positions=(0, 0), model_id="m")
    with pytest.raises(ManifestError):
        Request(words=(), masked_positions=(), model_id="m")


def _write_manifest(path, model_id, requests):
    entries = [
        {"id": request_id(r).hex(), "words": list(r.words),
         "masked_positions": list(r.masked_positions)}
        for r in requests
    ]
    path.write_text(json.dumps({"model_id": model_id, "requests": entries}),
                    encoding="utf-8")


def test_load_manifest_roundtrip(tmp_path):
    reqs = [
        Request(words=("the", "cat"), masked_positions=(1,), model_id="m"),
        Request(words=("sun",), masked_positions=(), model_id="m"),
    ]
    path = tmp_path / "manifest.json"
    _write_manifest(path, "m", reqs)
    model_id, loaded = load_manifest(path)
    assert model_id == "m"
    assert loaded == reqs


def test_load_manifest_rejects_wrong_id(tmp_path):
    path = tmp_path / "manifest.json"
    req = Request(words=("the",), masked_positions=(), model_id="m")
    entry = {"id": "00" * 32, "words": list(req.words), "masked_positions": []}
    path.write_text(json.dumps({"model_id": "m", "requests": [entry]}))
    with pytest.raises(ManifestError, match="hash"):
        load_manifest(path)


def test_load_manifest_rejects_duplicates(tmp_path):
    path = tmp_path / "manifest.json"
    req = Request(words=("the",), masked_positions=(), model_id="m")
    _write_manifest(path, "m", [req, req])
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(path)


def test_load_manifest_rejects_malformed(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("[]")
    with pytest.raises(ManifestError):
        load_manifest(path)
    path.write_text(json.dumps({"requests": []}))
    with pytest.raises(ManifestError):
        load_manifest(path)
    path.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_load_manifest_missing_file(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "absent.json")
