"""Wire-protocol conformance and concurrency behavior of the HTTP server."""

from concurrent.futures import ThreadPoolExecutor

import pytest
import requests
import slupipe
from slupipe import GenerationRequest, HttpBackend, verify_protocol

from model_adapter.server import ModelServer
from model_adapter.trainer import TrainerConfig, train

PROMPT = "transfer sentence to intents : list flights to denver"


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    samples = slupipe.load_split(slupipe.mini_corpus_dir(), "test")
    lexicon = slupipe.register_corpus_labels(samples, slupipe.LabelLexicon())
    root = tmp_path_factory.mktemp("server")
    data = root / "train.jsonl"
    slupipe.write_examples(slupipe.expand_split(samples, lexicon), data)
    cfg = TrainerConfig(epochs=0, seed=5)
    return train(data, root / "ckpt", cfg).checkpoint_dir


@pytest.fixture(scope="module")
def server(checkpoint):
    srv = ModelServer(checkpoint)
    try:
        srv.wait_ready(timeout=30.0)
        yield srv
    finally:
        srv.close()


class TestProtocolConformance:
    def test_passes_reference_verifier(self, server):
        assert verify_protocol(server.base_url) == []

    def test_http_backend_round_trip(self, server):
        backend = HttpBackend(server.base_url)
        response = backend.generate(GenerationRequest(PROMPT, max_new_tokens=8))
        assert isinstance(response.text, str)

    def test_unknown_path_is_404(self, server):
        response = requests.post(
            server.base_url + "/v1/other", json={"prompt": "x"}, timeout=5
        )
        assert response.status_code == 404

    @pytest.mark.parametrize(
        "payload",
        [
            {"max_new_tokens": 8},
            {"prompt": ""},
            {"prompt": 7},
            {"prompt": None},
            {"prompt": "x", "max_new_tokens": 0},
            {"prompt": "x", "max_new_tokens": -3},
            {"prompt": "x", "max_new_tokens": "8"},
            {"prompt": "x", "max_new_tokens": True},
            [1, 2, 3],
        ],
    )
    def test_malformed_body_is_400(self, server, payload):
        response = requests.post(
            server.base_url + "/v1/generate", json=payload, timeout=5
        )
        assert response.status_code == 400
        assert "error" in response.json()

    def test_raw_non_json_body_is_400(self, server):
        response = requests.post(
            server.base_url + "/v1/generate",
            data=b"definitely not json",
            headers={"Content-Type": "application/json"},
            timeout=5,
        )
        assert response.status_code == 400

    def test_max_new_tokens_defaults_when_absent(self, server):
        response = requests.post(
            server.base_url + "/v1/generate",
            json={"prompt": "transfer sentence to intents : hi"},
            timeout=30,
        )
        assert response.status_code == 200
        assert isinstance(response.json()["text"], str)


class TestDeterminism:
    def test_identical_requests_get_identical_text(self, server):
        backend = HttpBackend(server.base_url)
        req = GenerationRequest(PROMPT, max_new_tokens=16)
        first = backend.generate(req).text
        second = backend.generate(req).text
        assert first == second

    def test_concurrent_identical_requests_agree(self, server):
        backend = HttpBackend(server.base_url)
        req = GenerationRequest(PROMPT, max_new_tokens=16)
        with ThreadPoolExecutor(max_workers=8) as pool:
            texts = [f.result() for f in [pool.submit(backend.generate, req) for _ in range(8)]]
        assert len({r.text for r in texts}) == 1


class TestLoadingWindow:
    def test_503_until_ready_then_retries_succeed(self, checkpoint):
        srv = ModelServer(checkpoint, load_delay=1.0)
        try:
            early = requests.post(
                srv.base_url + "/v1/generate",
                json={"prompt": PROMPT, "max_new_tokens": 8},
                timeout=5,
            )
            assert early.status_code == 503
            assert "error" in early.json()
            backend = HttpBackend(srv.base_url, max_retries=6, retry_wait=0.4)
            response = backend.generate(GenerationRequest(PROMPT, max_new_tokens=8))
            assert isinstance(response.text, str)
        finally:
            srv.close()

    def test_close_stops_accepting(self, checkpoint):
        srv = ModelServer(checkpoint)
        srv.wait_ready(timeout=30.0)
        url = srv.base_url
        srv.close()
        with pytest.raises(requests.RequestException):
            requests.post(
                url + "/v1/generate",
                json={"prompt": PROMPT, "max_new_tokens": 8},
                timeout=2,
            )
