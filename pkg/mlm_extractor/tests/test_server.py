import base64
import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from mlm_extractor.manifest import Request
from mlm_extractor.server import make_server


@pytest.fixture(scope="module")
def server(extractor):
    srv = make_server(extractor, max_inflight=2, retry_after=0.25)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


@pytest.fixture(scope="module")
def base_url(server):
    host, port = server.server_address[:2]
    return f"http://{host}:{port}"


def _get(url):
    with urllib.request.urlopen(url, timeout=10) as resp:
        return resp.status, json.loads(resp.read().decode("utf-8"))


def _post(url, payload, raw=None):
    body = raw if raw is not None else json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(url, data=body,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=30) as resp:
        return resp.status, json.loads(resp.read().decode("utf-8"))


def test_model_endpoint(base_url, extractor):
    status, body = _get(base_url + "/v1/model")
    assert status == 200
    assert body == {"model_id": "tiny", "n_layers": extractor.n_layers,
                    "dim": extractor.dim}


def test_embed_matches_direct_extraction(base_url, extractor):
    req = Request(words=("the", "blip", "runs"), masked_positions=(1,),
                  model_id="tiny")
    status, body = _post(base_url + "/v1/embed", {
        "model_id": "tiny", "words": list(req.words),
        "masked_positions": list(req.masked_positions)})
    assert status == 200
    values, alignment, _ = extractor.embed_request(req)
    assert body["n_layers"] == extractor.n_layers
    assert body["dim"] == extractor.dim
    assert body["subword_token_map"] == alignment.tolist()
    assert base64.b64decode(body["vectors_b64"]) == values.tobytes()


def test_unknown_path_is_404(base_url):
    with pytest.raises(urllib.error.HTTPError) as err:
        _get(base_url + "/v1/nothing")
    assert err.value.code == 404


def test_wrong_model_is_404(base_url):
    with pytest.raises(urllib.error.HTTPError) as err:
        _post(base_url + "/v1/embed",
              {"model_id": "other", "words": ["cat"], "masked_positions": []})
    assert err.value.code == 404


@pytest.mark.parametrize("payload", [
    {"model_id": "tiny", "words": ["cat"]},
    {"model_id": "tiny", "words": [], "masked_positions": []},
    {"model_id": "tiny", "words": ["cat"], "masked_positions": [3]},
    {"model_id": "tiny", "words": ["a", "b"], "masked_positions": [1, 0]},
    {"model_id": "tiny", "words": "cat", "masked_positions": []},
    {"model_id": "tiny", "words": ["cat"], "masked_positions": "0"},
])
def test_malformed_requests_are_400(base_url, payload):
    with pytest.raises(urllib.error.HTTPError) as err:
        _post(base_url + "/v1/embed", payload)
    assert err.value.code == 400


def test_unparseable_body_is_400(base_url):
    with pytest.raises(urllib.error.HTTPError) as err:
        _post(base_url + "/v1/embed", None, raw=b"{nope")
    assert err.value.code == 400


def test_busy_server_returns_503_with_retry_after(base_url, server):
    server.slots.acquire()
    server.slots.acquire()
    try:
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(base_url + "/v1/embed",
                  {"model_id": "tiny", "words": ["cat"],
                   "masked_positions": []})
        assert err.value.code == 503
        assert float(err.value.headers["Retry-After"]) == 0.25
    finally:
        server.slots.release()
        server.slots.release()
    # slots released: the same request goes through again
    status, _ = _post(base_url + "/v1/embed",
                      {"model_id": "tiny", "words": ["cat"],
                       "masked_positions": []})
    assert status == 200
