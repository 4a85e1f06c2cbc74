"""Pluggable completion backends with record/replay, caching, and retry.

Every request is content-addressed by a SHA-256 digest over a canonical
serialization of (prompt, params), so fixtures and caches are stable
across machines and runs. The sample index is part of the digest: drawing
q samples per source occupies q distinct slots even at one temperature.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Protocol, Sequence

from .errors import (
    AuthMissing,
    BackendError,
    BackendUnavailable,
    DuplicateDigest,
    IoFailure,
    ReplayMiss,
    TransientBackendError,
)

logger = logging.getLogger("styledistill.backend")

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_OUTPUT_TOKENS = 512


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    sample_index: int = 0
    model_id: str = "default"

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.sample_index < 0:
            raise ValueError("sample_index must be non-negative")


@dataclass(frozen=True)
class RawCompletion:
    text: str
    backend_id: str
    cached: bool
    request_digest: str
    truncated: bool = False


def canonical_request(prompt: str, params: GenerationParams) -> str:
    """Canonical serialization: sorted keys, JSON shortest-roundtrip numbers."""
    return json.dumps(
        {
            "max_output_tokens": int(params.max_output_tokens),
            "model_id": params.model_id,
            "prompt": prompt,
            "sample_index": int(params.sample_index),
            "temperature": float(params.temperature),
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def request_digest(prompt: str, params: GenerationParams) -> str:
    return hashlib.sha256(canonical_request(prompt, params).encode("utf-8")).hexdigest()


def prompt_sha(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend(Protocol):
    backend_id: str

    def complete(self, prompt: str, params: GenerationParams) -> RawCompletion: ...


# --- stub -------------------------------------------------------------------

class StubBackend:
    """Deterministic test/demo backend, no network.

    By default it reads the query's ``Source:`` line back out of the prompt
    and produces a well-formed target-blind completion for it. A fixed
    string or a callable(prompt, params) -> str can replace that.
    """

    backend_id = "stub"

    def __init__(self, reply: str | Callable[[str, GenerationParams], str] | None = None):
        self._reply = reply

    def _synthesize(self, prompt: str, params: GenerationParams) -> str:
        source = ""
        for line in prompt.split("\n"):
            if line.startswith("Source: "):
                source = line[len("Source: ") :]
        restyled = source[:1].upper() + source[1:] if source else "Nothing to rewrite"
        if not restyled.endswith((".", "!", "?")):
            restyled += "."
        return (
            "The source text can be restyled by adjusting word choice and punctuation.\n"
            f"[Transferred]: {restyled}"
        )

    def complete(self, prompt: str, params: GenerationParams) -> RawCompletion:
        if callable(self._reply):
            text = self._reply(prompt, params)
        elif self._reply is not None:
            text = self._reply
        else:
            text = self._synthesize(prompt, params)
        words = text.split(" ")
        truncated = len(words) > params.max_output_tokens
        if truncated:
            text = " ".join(words[: params.max_output_tokens])
        return RawCompletion(
            text=text,
            backend_id=self.backend_id,
            cached=False,
            request_digest=request_digest(prompt, params),
            truncated=truncated,
        )


# --- replay -----------------------------------------------------------------

class ReplayBackend:
    """Serves completions from a recorded fixture; misses are hard errors."""

    backend_id = "replay"

    def __init__(self, fixture_path: str | Path):
        self._entries = load_fixture(fixture_path)
        self._path = Path(fixture_path)

    def complete(self, prompt: str, params: GenerationParams) -> RawCompletion:
        digest = request_digest(prompt, params)
        entry = self._entries.get(digest)
        if entry is None:
            raise ReplayMiss(f"digest {digest} not in fixture {self._path}", digest=digest)
        return RawCompletion(
            text=entry["text"],
            backend_id=self.backend_id,
            cached=True,
            request_digest=digest,
        )


# --- live -------------------------------------------------------------------

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_SECONDS = 1.0


class LiveBackend:
    """Wraps a transport callable with retry and exponential backoff.

    Only transport/5xx-class failures (TransientBackendError) are retried;
    anything else fails immediately.
    """

    backend_id = "live"

    def __init__(
        self,
        transport: Callable[[str, GenerationParams], str],
        attempts: int = RETRY_ATTEMPTS,
        backoff: float = RETRY_BACKOFF_SECONDS,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self._transport = transport
        self._attempts = attempts
        self._backoff = backoff
        self._sleep = sleeper

    def complete(self, prompt: str, params: GenerationParams) -> RawCompletion:
        delay = self._backoff
        last: Exception | None = None
        for attempt in range(1, self._attempts + 1):
            try:
                text = self._transport(prompt, params)
                return RawCompletion(
                    text=text,
                    backend_id=self.backend_id,
                    cached=False,
                    request_digest=request_digest(prompt, params),
                )
            except TransientBackendError as e:
                last = e
                if attempt < self._attempts:
                    logger.warning("transient backend failure (attempt %d/%d): %s", attempt, self._attempts, e)
                    self._sleep(delay)
                    delay *= 2
        raise BackendUnavailable(f"backend failed after {self._attempts} attempts: {last}") from last


def make_http_transport(
    url: str,
    api_key_env: str = "STYLEDISTILL_API_KEY",
    timeout: float = 60.0,
) -> Callable[[str, GenerationParams], str]:
    """Minimal plain-text completion adapter: POST JSON in, {"text": ...} out.

    Provider-specific wire formats belong in user-supplied transports; this
    one exists so `--backend live` works against anything speaking the
    simple schema.
    """
    import httpx

    def transport(prompt: str, params: GenerationParams) -> str:
        api_key = os.environ.get(api_key_env)
        if not api_key:
            raise AuthMissing(f"set {api_key_env} to use the live backend")
        payload = {
            "model": params.model_id,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        try:
            response = httpx.post(
                url, json=payload, headers={"Authorization": f"Bearer {api_key}"}, timeout=timeout
            )
        except httpx.HTTPError as e:
            raise TransientBackendError(f"transport failure: {e}") from e
        if response.status_code >= 500:
            raise TransientBackendError(f"server error {response.status_code}")
        if response.status_code >= 400:
            raise BackendError(f"request rejected: {response.status_code} {response.text[:200]}")
        return response.json()["text"]

    return transport


# --- caching ----------------------------------------------------------------

class CachingBackend:
    """Memoizes completions by request digest, optionally on disk.

    Disk writes are idempotent (same key, same value) and use atomic
    replace, so concurrent writers need no further coordination.
    """

    def __init__(self, inner: Backend, cache_dir: str | Path | None = None):
        self._inner = inner
        self.backend_id = inner.backend_id
        self._memory: dict[str, RawCompletion] = {}
        self._cache_dir = Path(cache_dir) if cache_dir else None
        if self._cache_dir:
            self._cache_dir.mkdir(parents=True, exist_ok=True)

    def _disk_path(self, digest: str) -> Path | None:
        return self._cache_dir / f"{digest}.json" if self._cache_dir else None

    def complete(self, prompt: str, params: GenerationParams) -> RawCompletion:
        digest = request_digest(prompt, params)
        hit = self._memory.get(digest)
        if hit is not None:
            return replace(hit, cached=True)
        disk = self._disk_path(digest)
        if disk is not None and disk.is_file():
            obj = json.loads(disk.read_text(encoding="utf-8"))
            completion = RawCompletion(
                text=obj["text"],
                backend_id=obj.get("backend_id", self.backend_id),
                cached=True,
                request_digest=digest,
                truncated=obj.get("truncated", False),
            )
            self._memory[digest] = completion
            return completion
        completion = self._inner.complete(prompt, params)
        self._memory[digest] = completion
        if disk is not None:
            tmp = disk.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(
                    {"text": completion.text, "backend_id": completion.backend_id, "truncated": completion.truncated},
                    ensure_ascii=False,
                ),
                encoding="utf-8",
            )
            os.replace(tmp, disk)
        return completion


# --- batching ---------------------------------------------------------------

def complete_batch(
    backend: Backend,
    requests: Sequence[tuple[str, GenerationParams]],
    parallelism: int = 1,
) -> list[RawCompletion]:
    """Run requests through the backend with bounded parallelism.

    Results come back in input order. On failure, all in-flight requests
    are drained, then the error at the lowest request index propagates
    (same class, message names the index).
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if not requests:
        return []

    results: list[RawCompletion | None] = [None] * len(requests)
    failures: dict[int, Exception] = {}
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = {
            pool.submit(backend.complete, prompt, params): i
            for i, (prompt, params) in enumerate(requests)
        }
        for future, i in futures.items():
            try:
                results[i] = future.result()
            except Exception as e:  # noqa: BLE001 - collected and re-raised below
                failures[i] = e

    if failures:
        index = min(failures)
        cause = failures[index]
        try:
            error = type(cause)(f"request {index}: {cause}")
        except TypeError:
            error = BackendError(f"request {index}: {cause}")
        error.request_index = index  # type: ignore[attr-defined]
        raise error from cause
    return results  # type: ignore[return-value]


# --- fixtures ---------------------------------------------------------------

def record_fixture(
    requests: Sequence[tuple[str, GenerationParams]],
    live_results: Sequence[RawCompletion],
    path: str | Path,
) -> Path:
    """Persist completions as a replay fixture: JSONL of
    {digest, prompt_sha, model_id, text}, one line per request."""
    if len(requests) != len(live_results):
        raise ValueError("requests and results must align")
    path = Path(path)
    seen: set[str] = set()
    lines = []
    for (prompt, params), completion in zip(requests, live_results):
        digest = request_digest(prompt, params)
        if digest in seen:
            raise DuplicateDigest(f"duplicate (prompt, params) at digest {digest}")
        seen.add(digest)
        lines.append(
            json.dumps(
                {
                    "digest": digest,
                    "prompt_sha": prompt_sha(prompt),
                    "model_id": params.model_id,
                    "text": completion.text,
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write fixture {path}: {e}") from e
    return path


def load_fixture(path: str | Path) -> dict[str, dict]:
    path = Path(path)
    if not path.is_file():
        raise IoFailure(f"fixture not found: {path}")
    entries: dict[str, dict] = {}
    with path.open(encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            digest = obj["digest"]
            if digest in entries and entries[digest]["text"] != obj["text"]:
                raise DuplicateDigest(f"conflicting fixture entries for digest {digest}")
            entries[digest] = obj
    return entries
