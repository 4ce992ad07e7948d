"""Pluggable text-generation backends.

Two implementations ship here: a gold-lookup oracle for testing the
pipeline without a model, and an HTTP client for an external generation
server speaking a one-endpoint protocol:

    POST /v1/generate
    request  {"prompt": string, "max_new_tokens": integer}
    response {"text": string}
    status   200 ok | 400 malformed request | 503 model loading

Backends are safe to call from multiple threads.  The HTTP client bounds
in-flight requests and retries only transient failures (503, timeouts,
transport errors) up to a configured count; other statuses surface
immediately as distinct errors.
"""

from __future__ import annotations

import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

import requests

from .dataset import CorpusError, GoldTargets, RawSample, make_gold_targets
from .lexicon import LabelLexicon
from .prompts import ID_PREFIX, PromptError, TaskKind, classify_prompt
from .spans import KV_SEP


class BackendError(Exception):
    """Base for every generation-backend failure."""


class TransportError(BackendError):
    """The server could not be reached."""


class DeadlineExceededError(BackendError):
    """The server did not answer within the deadline."""


class ServerStatusError(BackendError):
    """The server answered with a non-success status."""

    def __init__(self, status: int, message: str):
        super().__init__(f"server returned {status}: {message}")
        self.status = status


class ProtocolError(BackendError):
    """The server's response violates the wire protocol."""


class OracleMissError(BackendError):
    """The oracle has no gold answer for the prompt."""


class AmbiguousCorpusError(CorpusError):
    """Two corpus samples cannot be told apart by their text."""


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_new_tokens: int = 128

    def __post_init__(self) -> None:
        if not self.prompt:
            raise BackendError("prompt must be non-empty")
        if self.max_new_tokens < 1:
            raise BackendError(f"max_new_tokens must be positive, got {self.max_new_tokens}")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    backend_id: str


class GenerationBackend(ABC):
    backend_id: str

    @abstractmethod
    def generate(self, req: GenerationRequest) -> GenerationResponse:
        """Produce text for the prompt or raise a BackendError subclass."""


def _suffix_key(text: str) -> str:
    return text.rsplit(KV_SEP, 1)[-1]


class OracleBackend(GenerationBackend):
    """Resolves prompts over a fixed corpus to the gold targets.

    Intent prompts are matched on the full utterance after the template
    prefix.  Slot prompts are matched on the text after the LAST ``" : "``,
    so they resolve no matter what intents the prompt embeds.  The corpus
    must therefore be unambiguous under both keys; collisions are rejected
    at construction.  Immutable afterward, hence thread-safe.
    """

    def __init__(
        self,
        samples: list[RawSample],
        lexicon: LabelLexicon,
        backend_id: str = "oracle",
    ):
        self.backend_id = backend_id
        self._by_text: dict[str, GoldTargets] = {}
        self._by_suffix: dict[str, GoldTargets] = {}
        text_owners: dict[str, str] = {}
        suffix_owners: dict[str, str] = {}
        for sample in samples:
            text = sample.utt.raw_text
            if text in text_owners:
                raise AmbiguousCorpusError(
                    f"samples {text_owners[text]} and {sample.sample_id} "
                    f"share the utterance {text!r}"
                )
            suffix = _suffix_key(text)
            if suffix in suffix_owners:
                raise AmbiguousCorpusError(
                    f"samples {suffix_owners[suffix]} and {sample.sample_id} "
                    f"share the lookup suffix {suffix!r}"
                )
            targets = make_gold_targets(sample, lexicon)
            text_owners[text] = sample.sample_id
            suffix_owners[suffix] = sample.sample_id
            self._by_text[text] = targets
            self._by_suffix[suffix] = targets

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        try:
            task = classify_prompt(req.prompt)
        except PromptError as exc:
            raise OracleMissError(str(exc)) from exc
        if task is TaskKind.INTENT_DETECTION:
            text = req.prompt[len(ID_PREFIX):]
            targets = self._by_text.get(text)
            if targets is None:
                raise OracleMissError(f"utterance not in corpus: {text!r}")
            return GenerationResponse(targets.id_target, self.backend_id)
        suffix = _suffix_key(req.prompt)
        targets = self._by_suffix.get(suffix)
        if targets is None:
            raise OracleMissError(f"no corpus utterance ends with {suffix!r}")
        answer = (
            targets.sf_target if task is TaskKind.SLOT_FILLING else targets.sp_target
        )
        return GenerationResponse(answer, self.backend_id)


_GENERATE_PATH = "/v1/generate"


class HttpBackend(GenerationBackend):
    """Client for a generation server speaking the wire protocol above."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        max_retries: int = 2,
        max_in_flight: int = 8,
        retry_wait: float = 0.5,
        backend_id: str | None = None,
    ):
        self._url = base_url.rstrip("/") + _GENERATE_PATH
        self._timeout = timeout
        self._max_retries = max_retries
        self._retry_wait = retry_wait
        self._session = requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.backend_id = backend_id if backend_id is not None else f"http:{base_url}"

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        payload = {"prompt": req.prompt, "max_new_tokens": req.max_new_tokens}
        last_error: BackendError | None = None
        for attempt in range(self._max_retries + 1):
            if attempt > 0:
                time.sleep(self._retry_wait)
            try:
                with self._slots:
                    response = self._session.post(
                        self._url, json=payload, timeout=self._timeout
                    )
            except requests.Timeout as exc:
                last_error = DeadlineExceededError(
                    f"no answer within {self._timeout}s: {exc}"
                )
                continue
            except requests.RequestException as exc:
                last_error = TransportError(str(exc))
                continue
            if response.status_code == 503:
                last_error = ServerStatusError(503, "model loading")
                continue
            if response.status_code != 200:
                raise ServerStatusError(response.status_code, response.text[:200])
            return GenerationResponse(self._parse_body(response), self.backend_id)
        assert last_error is not None
        raise last_error

    def _parse_body(self, response: requests.Response) -> str:
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"response body is not JSON: {exc}") from exc
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise ProtocolError('response must be an object with a string "text" field')
        return body["text"]


def verify_protocol(base_url: str, timeout: float = 10.0) -> list[str]:
    """Exercise a server against the wire protocol; empty list means pass.

    Checks the happy path (200, JSON content type, string ``text`` field)
    and that malformed requests are answered with status 400.
    """
    problems: list[str] = []
    url = base_url.rstrip("/") + _GENERATE_PATH
    session = requests.Session()
    good = {"prompt": "transfer sentence to intents : hello", "max_new_tokens": 8}
    try:
        response = session.post(url, json=good, timeout=timeout)
    except requests.RequestException as exc:
        return [f"valid request failed at transport level: {exc}"]
    if response.status_code != 200:
        problems.append(f"valid request got status {response.status_code}, want 200")
    else:
        content_type = response.headers.get("Content-Type", "")
        if "application/json" not in content_type:
            problems.append(f"content type {content_type!r} is not application/json")
        try:
            body = response.json()
        except ValueError:
            problems.append("success response body is not JSON")
        else:
            if not isinstance(body, dict) or not isinstance(body.get("text"), str):
                problems.append('success response lacks a string "text" field')
    bad_bodies = [
        ("missing prompt", {"max_new_tokens": 8}),
        ("non-string prompt", {"prompt": 7, "max_new_tokens": 8}),
        ("empty prompt", {"prompt": "", "max_new_tokens": 8}),
    ]
    for label, payload in bad_bodies:
        try:
            response = session.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            problems.append(f"{label}: transport failure: {exc}")
            continue
        if response.status_code != 400:
            problems.append(
                f"{label}: got status {response.status_code}, want 400"
            )
    try:
        response = session.post(
            url,
            data=b"not json",
            headers={"Content-Type": "application/json"},
            timeout=timeout,
        )
    except requests.RequestException as exc:
        problems.append(f"unparseable body: transport failure: {exc}")
    else:
        if response.status_code != 400:
            problems.append(
                f"unparseable body: got status {response.status_code}, want 400"
            )
    return problems
