"""HTTP generation server speaking the one-endpoint wire protocol.

    POST /v1/generate
    request  {"prompt": string, "max_new_tokens": integer}
    response {"text": string}
    status   200 ok | 400 malformed request | 503 model loading

The socket is bound before the checkpoint is loaded, so early clients get
503 (retryable) instead of connection refused.  ``max_new_tokens`` may be
omitted (default 128) and is capped server-side.  Decoding is greedy and
the model is in eval mode, so identical requests yield identical text;
generation is serialized with a lock, which also makes concurrent requests
safe.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .modeling import greedy_decode
from .trainer import load_checkpoint

DEFAULT_MAX_NEW_TOKENS = 128
MAX_NEW_TOKENS_CAP = 256
_GENERATE_PATH = "/v1/generate"


class _RequestError(ValueError):
    """A request body that violates the protocol."""


def _parse_request(raw: bytes) -> tuple[str, int]:
    """Validate a request body; returns (prompt, max_new_tokens)."""
    try:
        body = json.loads(raw)
    except ValueError as exc:
        raise _RequestError(f"body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise _RequestError("body must be a JSON object")
    prompt = body.get("prompt")
    if not isinstance(prompt, str) or not prompt:
        raise _RequestError('"prompt" must be a non-empty string')
    max_new_tokens = body.get("max_new_tokens", DEFAULT_MAX_NEW_TOKENS)
    if (
        not isinstance(max_new_tokens, int)
        or isinstance(max_new_tokens, bool)
        or max_new_tokens < 1
    ):
        raise _RequestError('"max_new_tokens" must be a positive integer')
    return prompt, min(max_new_tokens, MAX_NEW_TOKENS_CAP)


class _Handler(BaseHTTPRequestHandler):
    server: "_AdapterHTTPServer"

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        pass  # keep test and CLI output clean

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self) -> None:  # noqa: N802 (stdlib handler naming)
        if self.path != _GENERATE_PATH:
            self._reply(404, {"error": f"unknown path {self.path}"})
            return
        owner = self.server.owner
        if not owner.ready.is_set():
            self._reply(503, {"error": "model loading"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        try:
            prompt, max_new_tokens = _parse_request(self.rfile.read(length))
        except _RequestError as exc:
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, {"text": owner.generate(prompt, max_new_tokens)})


class _AdapterHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    owner: "ModelServer"


class ModelServer:
    """Serves a trained checkpoint; binds at construction, loads in background.

    ``load_delay`` artificially lengthens the loading window (useful for
    exercising 503 handling); leave it at 0.0 otherwise.
    """

    def __init__(
        self,
        checkpoint_dir: str | Path,
        host: str = "127.0.0.1",
        port: int = 0,
        load_delay: float = 0.0,
    ):
        self._checkpoint_dir = Path(checkpoint_dir)
        self._load_delay = load_delay
        self.ready = threading.Event()
        self._model = None
        self._vocab = None
        self._decode_lock = threading.Lock()
        self._httpd = _AdapterHTTPServer((host, port), _Handler)
        self._httpd.owner = self
        self._serve_thread = threading.Thread(
            target=self._httpd.serve_forever, daemon=True
        )
        self._serve_thread.start()
        self._load_thread = threading.Thread(target=self._load, daemon=True)
        self._load_thread.start()

    def _load(self) -> None:
        if self._load_delay:
            time.sleep(self._load_delay)
        model, vocab, _meta = load_checkpoint(self._checkpoint_dir)
        self._model = model
        self._vocab = vocab
        self.ready.set()

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def wait_ready(self, timeout: float | None = None) -> bool:
        return self.ready.wait(timeout)

    def generate(self, prompt: str, max_new_tokens: int) -> str:
        with self._decode_lock:
            return greedy_decode(self._model, self._vocab, prompt, max_new_tokens)

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._serve_thread.join(timeout=5)


def serve(checkpoint_dir: str | Path, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run a server in the foreground until interrupted."""
    server = ModelServer(checkpoint_dir, host=host, port=port)
    print(f"listening on {server.base_url} (loading checkpoint)", flush=True)
    server.wait_ready()
    print("ready", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
