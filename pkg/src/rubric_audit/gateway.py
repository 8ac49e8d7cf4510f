"""Chat-completion backends, decoding parameters, and a content-addressed response cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol

from .prompts import ChatTranscript

__all__ = [
    "ChatParams",
    "Backend",
    "GatewayError",
    "TransportError",
    "ProtocolError",
    "EmptyResponseError",
    "FixtureMissError",
    "CacheIntegrityError",
    "MockBackend",
    "FunctionBackend",
    "RecordingBackend",
    "ChatAPIBackend",
    "ResponseCache",
    "cache_key",
    "transcript_digest",
    "complete",
    "cached_complete",
    "ENV_BASE_URL",
    "ENV_API_KEY",
]

log = logging.getLogger(__name__)

ENV_BASE_URL = "RUBRIC_AUDIT_BASE_URL"
ENV_API_KEY = "RUBRIC_AUDIT_API_KEY"

MAX_ATTEMPTS = 3
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """Transient failure reaching the backend; eligible for retry."""


class ProtocolError(GatewayError):
    """The backend rejected the request."""


class EmptyResponseError(GatewayError):
    pass


class FixtureMissError(GatewayError):
    """The mock backend has no canned response for the transcript."""


class CacheIntegrityError(GatewayError):
    pass


@dataclass(frozen=True)
class ChatParams:
    model: str = "mixtral-8x7b-instruct"
    temperature: float = 0.0
    top_p: float = 0.01
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }


class Backend(Protocol):
    def complete(self, transcript: ChatTranscript, params: ChatParams) -> str: ...


def transcript_digest(transcript: ChatTranscript) -> str:
    return hashlib.sha256(transcript.canonical().encode("utf-8")).hexdigest()


def cache_key(transcript: ChatTranscript, params: ChatParams) -> str:
    payload = json.dumps(
        {"params": params.as_dict(), "messages": json.loads(transcript.canonical())},
        ensure_ascii=False,
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# -- backends ----------------------------------------------------------------


class MockBackend:
    """Replays canned responses keyed by transcript digest.

    The fixture file is JSON ``{"responses": {digest: text}}``. :meth:`save`
    also writes a ``.index.tsv`` sidecar listing each digest with a preview of
    the transcript's last user turn, for humans browsing the fixture.
    """

    def __init__(self, responses: Mapping[str, str] | None = None) -> None:
        self.responses: dict[str, str] = dict(responses or {})
        self.previews: dict[str, str] = {}
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> MockBackend:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict) or not isinstance(doc.get("responses"), dict):
            raise ProtocolError(f"{path}: mock fixture must hold a 'responses' object")
        return cls(doc["responses"])

    def complete(self, transcript: ChatTranscript, params: ChatParams) -> str:
        with self._lock:
            self.calls += 1
        digest = transcript_digest(transcript)
        try:
            return self.responses[digest]
        except KeyError:
            raise FixtureMissError(f"no fixture for transcript {digest[:16]}") from None

    def record(self, transcript: ChatTranscript, text: str) -> None:
        digest = transcript_digest(transcript)
        with self._lock:
            self.responses[digest] = text
            preview = transcript.messages[-1].content.replace("\n", " ").replace("\t", " ")
            self.previews[digest] = preview[:120]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        doc = {"responses": dict(sorted(self.responses.items()))}
        path.write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
        lines = [f"{d}\t{self.previews.get(d, '')}" for d in sorted(self.responses)]
        path.with_suffix(".index.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


class FunctionBackend:
    """Backend computed by a plain function of the transcript (oracles, simulators)."""

    def __init__(self, fn: Callable[[ChatTranscript], str]) -> None:
        self.fn = fn
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, transcript: ChatTranscript, params: ChatParams) -> str:
        with self._lock:
            self.calls += 1
        return self.fn(transcript)


class RecordingBackend:
    """Forwards to ``inner`` and records every answer into a :class:`MockBackend`."""

    def __init__(self, inner: Backend, sink: MockBackend | None = None) -> None:
        self.inner = inner
        self.sink = sink or MockBackend()

    def complete(self, transcript: ChatTranscript, params: ChatParams) -> str:
        text = self.inner.complete(transcript, params)
        self.sink.record(transcript, text)
        return text


class ChatAPIBackend:
    """Backend speaking the common ``/chat/completions`` JSON protocol."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
    ) -> None:
        base_url = base_url or os.environ.get(ENV_BASE_URL)
        if not base_url:
            raise ValueError(f"no backend URL given and {ENV_BASE_URL} is unset")
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        self.timeout = timeout

    def complete(self, transcript: ChatTranscript, params: ChatParams) -> str:
        body = {"messages": transcript.to_wire(), **params.as_dict()}
        req = urllib.request.Request(
            self.url,
            data=json.dumps(body).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        if self.api_key:
            req.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode("utf-8", "replace")
            if exc.code == 429 or exc.code >= 500:
                raise TransportError(f"HTTP {exc.code}: {detail}") from exc
            raise ProtocolError(f"HTTP {exc.code}: {detail}") from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransportError(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"backend returned invalid JSON: {exc}") from exc
        try:
            return doc["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise ProtocolError(f"unexpected completion payload: {str(doc)[:200]}") from None


def complete(
    backend: Backend,
    transcript: ChatTranscript,
    params: ChatParams,
    *,
    attempts: int = MAX_ATTEMPTS,
    base_delay: float = BACKOFF_BASE,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Run one completion, retrying transport failures with exponential backoff."""
    delay = base_delay
    for attempt in range(1, attempts + 1):
        try:
            text = backend.complete(transcript, params)
            break
        except TransportError as exc:
            if attempt == attempts:
                raise TransportError(f"gave up after {attempts} attempts: {exc}") from exc
            log.warning("transport error (attempt %d/%d): %s", attempt, attempts, exc)
            sleep(delay)
            delay *= BACKOFF_FACTOR
    if not text or not text.strip():
        raise EmptyResponseError("backend returned an empty completion")
    return text


# -- cache -------------------------------------------------------------------


def _entry_check(key: str, response: str) -> str:
    return hashlib.sha256(f"{key}\n{response}".encode("utf-8")).hexdigest()[:16]


class ResponseCache:
    """Append-only JSON-lines cache of completions.

    Each line is ``{"key", "response", "created_at", "check"}`` where
    ``check`` hashes key and response so a damaged record is detected on load.
    Reads come from an in-memory index that is reloaded whenever the file
    changes on disk; writes are serialized by a lock.
    """

    def __init__(self, path: str | Path, clock: Callable[[], datetime] | None = None) -> None:
        self.path = Path(path)
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self._lock = threading.Lock()
        self._index: dict[str, str] = {}
        self._stamp: tuple | None = None
        self._refresh()

    def _file_stamp(self) -> tuple | None:
        try:
            st = self.path.stat()
        except FileNotFoundError:
            return None
        return (st.st_ino, st.st_size, st.st_mtime_ns)

    def _refresh(self) -> None:
        stamp = self._file_stamp()
        if stamp == self._stamp:
            return
        index: dict[str, str] = {}
        if stamp is not None:
            with self.path.open(encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        key, response = rec["key"], rec["response"]
                        ok = rec["check"] == _entry_check(key, response)
                    except (json.JSONDecodeError, KeyError, TypeError):
                        ok = False
                    if not ok:
                        raise CacheIntegrityError(f"{self.path}:{lineno}: corrupt cache record")
                    index[key] = response
        self._index = index
        self._stamp = stamp

    def get(self, key: str) -> str | None:
        with self._lock:
            self._refresh()
            return self._index.get(key)

    def put(self, key: str, response: str) -> None:
        with self._lock:
            self._refresh()
            if key in self._index:
                return
            rec = {
                "key": key,
                "response": response,
                "created_at": self.clock().isoformat(),
                "check": _entry_check(key, response),
            }
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self._index[key] = response
            self._stamp = self._file_stamp()

    def __contains__(self, key: str) -> bool:
        return self.get(key) is not None

    def __len__(self) -> int:
        with self._lock:
            self._refresh()
            return len(self._index)


def cached_complete(
    cache: ResponseCache | None,
    backend: Backend,
    transcript: ChatTranscript,
    params: ChatParams,
    **retry,
) -> str:
    if cache is None:
        return complete(backend, transcript, params, **retry)
    key = cache_key(transcript, params)
    hit = cache.get(key)
    if hit is not None:
        return hit
    text = complete(backend, transcript, params, **retry)
    cache.put(key, text)
    return text
