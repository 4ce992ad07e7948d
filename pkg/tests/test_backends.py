"""Backend tests: oracle lookups, HTTP client behavior, protocol harness."""

import json
import socket
import threading
import time
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from slupipe.backends import (
    AmbiguousCorpusError,
    BackendError,
    DeadlineExceededError,
    GenerationRequest,
    HttpBackend,
    OracleBackend,
    OracleMissError,
    ProtocolError,
    ServerStatusError,
    TransportError,
    verify_protocol,
)
from slupipe.bio import BioSequence, Utterance
from slupipe.dataset import RawSample, make_gold_targets
from slupipe.lexicon import LabelLexicon
from slupipe.prompts import TaskKind, build_ablated_prompt, build_prompt
from slupipe.spans import IntentSpan


class TestGenerationRequest:
    def test_default_budget(self):
        req = GenerationRequest("transfer sentence to intents : hi")
        assert req.max_new_tokens == 128

    def test_empty_prompt_rejected(self):
        with pytest.raises(BackendError):
            GenerationRequest("")

    def test_non_positive_budget_rejected(self):
        with pytest.raises(BackendError):
            GenerationRequest("p", max_new_tokens=0)


class TestOracleBackend:
    def test_id_prompt_returns_gold(self, mini_test):
        samples, lexicon = mini_test
        oracle = OracleBackend(samples, lexicon)
        gold = make_gold_targets(samples[0], lexicon)
        prompt = build_prompt(TaskKind.INTENT_DETECTION, samples[0].utt)
        assert oracle.generate(GenerationRequest(prompt.text)).text == gold.id_target

    def test_sf_prompt_resolves_despite_wrong_intents(self, mini_test):
        samples, lexicon = mini_test
        oracle = OracleBackend(samples, lexicon)
        gold = make_gold_targets(samples[1], lexicon)
        prompt = build_prompt(
            TaskKind.SLOT_FILLING, samples[1].utt, IntentSpan(("totally wrong",))
        )
        assert oracle.generate(GenerationRequest(prompt.text)).text == gold.sf_target

    def test_sp_prompt_resolves_with_ablated_template(self, mini_test):
        samples, lexicon = mini_test
        oracle = OracleBackend(samples, lexicon)
        gold = make_gold_targets(samples[3], lexicon)
        prompt = build_ablated_prompt(TaskKind.SLOT_PREDICTION, samples[3].utt)
        assert oracle.generate(GenerationRequest(prompt.text)).text == gold.sp_target

    def test_utterance_containing_separator_still_resolves(self, mini_dev):
        # The last sample's text contains " : " inside a clock time.
        samples, lexicon = mini_dev
        sample = samples[3]
        assert " : " in sample.utt.raw_text
        oracle = OracleBackend(samples, lexicon)
        gold = make_gold_targets(sample, lexicon)
        prompt = build_prompt(
            TaskKind.SLOT_FILLING, sample.utt, IntentSpan(("flight",))
        )
        assert oracle.generate(GenerationRequest(prompt.text)).text == gold.sf_target

    def test_unknown_utterance_misses(self, mini_test):
        samples, lexicon = mini_test
        oracle = OracleBackend(samples, lexicon)
        with pytest.raises(OracleMissError):
            oracle.generate(
                GenerationRequest("transfer sentence to intents : never seen text")
            )

    def test_unrecognized_prompt_misses(self, mini_test):
        samples, lexicon = mini_test
        oracle = OracleBackend(samples, lexicon)
        with pytest.raises(OracleMissError):
            oracle.generate(GenerationRequest("summarize : hello"))

    def test_empty_corpus_always_misses(self):
        oracle = OracleBackend([], LabelLexicon())
        with pytest.raises(OracleMissError):
            oracle.generate(GenerationRequest("transfer sentence to intents : hi"))

    def test_duplicate_utterances_rejected_at_construction(self):
        lexicon = LabelLexicon()
        samples = [
            RawSample("a-0000", Utterance(("hello",)), BioSequence(("O",)), ("x",)),
            RawSample("a-0001", Utterance(("hello",)), BioSequence(("O",)), ("y",)),
        ]
        with pytest.raises(AmbiguousCorpusError) as excinfo:
            OracleBackend(samples, lexicon)
        assert "a-0000" in str(excinfo.value) and "a-0001" in str(excinfo.value)


class _JsonHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def read_body(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return None

    def send_json(self, status, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def well_formed(self, body):
        return (
            isinstance(body, dict)
            and isinstance(body.get("prompt"), str)
            and body["prompt"] != ""
            and isinstance(body.get("max_new_tokens"), int)
        )


class EchoHandler(_JsonHandler):
    def do_POST(self):
        body = self.read_body()
        if self.path != "/v1/generate" or not self.well_formed(body):
            self.send_json(400, {"error": "malformed request"})
            return
        self.send_json(200, {"text": "echo " + body["prompt"]})


class WrongFieldHandler(_JsonHandler):
    def do_POST(self):
        body = self.read_body()
        if not self.well_formed(body):
            self.send_json(400, {"error": "malformed request"})
            return
        self.send_json(200, {"output": "oops"})


class AlwaysOkHandler(_JsonHandler):
    def do_POST(self):
        self.send_json(200, {"text": "x"})


class FailingHandler(_JsonHandler):
    def do_POST(self):
        type(self).calls += 1
        self.send_json(500, {"error": "boom"})


class LoadingThenOkHandler(_JsonHandler):
    def do_POST(self):
        type(self).calls += 1
        if type(self).calls <= 2:
            self.send_json(503, {"error": "model loading"})
        else:
            self.send_json(200, {"text": "ready"})


class AlwaysLoadingHandler(_JsonHandler):
    def do_POST(self):
        type(self).calls += 1
        self.send_json(503, {"error": "model loading"})


class SlowHandler(_JsonHandler):
    def do_POST(self):
        time.sleep(1.0)
        self.send_json(200, {"text": "late"})


@contextmanager
def stub_server(handler_cls):
    handler_cls.calls = 0
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler_cls)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}"
    finally:
        server.shutdown()
        server.server_close()


def _free_port():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


class TestHttpBackend:
    def test_happy_path(self):
        with stub_server(EchoHandler) as url:
            backend = HttpBackend(url)
            response = backend.generate(GenerationRequest("hello"))
            assert response.text == "echo hello"
            assert response.backend_id == backend.backend_id

    def test_missing_text_field_is_protocol_error(self):
        with stub_server(WrongFieldHandler) as url:
            with pytest.raises(ProtocolError):
                HttpBackend(url).generate(GenerationRequest("hello"))

    def test_server_error_status_not_retried(self):
        with stub_server(FailingHandler) as url:
            backend = HttpBackend(url, max_retries=3, retry_wait=0.01)
            with pytest.raises(ServerStatusError) as excinfo:
                backend.generate(GenerationRequest("hello"))
            assert excinfo.value.status == 500
            assert FailingHandler.calls == 1

    def test_loading_status_retried_until_ready(self):
        with stub_server(LoadingThenOkHandler) as url:
            backend = HttpBackend(url, max_retries=3, retry_wait=0.01)
            assert backend.generate(GenerationRequest("hello")).text == "ready"
            assert LoadingThenOkHandler.calls == 3

    def test_loading_status_exhausts_retries(self):
        with stub_server(AlwaysLoadingHandler) as url:
            backend = HttpBackend(url, max_retries=1, retry_wait=0.01)
            with pytest.raises(ServerStatusError) as excinfo:
                backend.generate(GenerationRequest("hello"))
            assert excinfo.value.status == 503
            assert AlwaysLoadingHandler.calls == 2

    def test_connection_failure_is_transport_error(self):
        backend = HttpBackend(
            f"http://127.0.0.1:{_free_port()}", max_retries=1, retry_wait=0.01
        )
        with pytest.raises(TransportError):
            backend.generate(GenerationRequest("hello"))

    def test_deadline_exceeded(self):
        with stub_server(SlowHandler) as url:
            backend = HttpBackend(url, timeout=0.2, max_retries=0)
            with pytest.raises(DeadlineExceededError):
                backend.generate(GenerationRequest("hello"))

    def test_concurrent_requests(self):
        with stub_server(EchoHandler) as url:
            backend = HttpBackend(url, max_in_flight=4)
            results = {}

            def worker(i):
                req = GenerationRequest(f"prompt {i}")
                results[i] = backend.generate(req).text

            threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert results == {i: f"echo prompt {i}" for i in range(8)}


class TestVerifyProtocol:
    def test_conformant_server_passes(self):
        with stub_server(EchoHandler) as url:
            assert verify_protocol(url) == []

    def test_wrong_field_name_flagged(self):
        with stub_server(WrongFieldHandler) as url:
            problems = verify_protocol(url)
            assert any("text" in p for p in problems)

    def test_missing_400_flagged(self):
        with stub_server(AlwaysOkHandler) as url:
            problems = verify_protocol(url)
            assert any("400" in p for p in problems)

    def test_broken_server_flagged(self):
        with stub_server(FailingHandler) as url:
            problems = verify_protocol(url)
            assert problems
