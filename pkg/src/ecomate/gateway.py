"""Uniform provider interface over chat-completion endpoints.

One wire dialect (OpenAI-style chat completions over HTTP) covers every
hosted model via endpoint configuration. A deterministic replay provider and
a configurable mock make the whole benchmark runnable with no network and no
API keys. Latency is measured around the provider call only.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .secret import Secret

DEFAULT_PERMITS = 4
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class GatewayError(RuntimeError):
    pass


class ProviderTimeoutError(GatewayError):
    """The provider did not answer within the configured timeout."""


class HttpError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class RateLimitedError(HttpError):
    """Still throttled after exhausting retries."""


class MissingFixtureError(GatewayError, KeyError):
    """The replay store has no response for this request."""


@dataclass(frozen=True)
class LlmRequest:
    model_id: str
    temperature: float
    messages: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not (0 <= self.temperature <= 2) or self.temperature != self.temperature:
            raise ValueError(f"temperature {self.temperature} out of range")

    @property
    def prompt_digest(self) -> str:
        payload = json.dumps([list(m) for m in self.messages],
                             sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class LlmResponse:
    text: str
    latency_ms: int
    provider_meta: dict = field(default_factory=dict)


@dataclass
class ProviderConfig:
    name: str
    endpoint_url: str = ""
    auth_token: Secret = field(default_factory=lambda: Secret(""))
    timeout_ms: int = 60_000
    max_retries: int = 3
    permits: int = DEFAULT_PERMITS


def format_temperature(value: float) -> str:
    """Directory-name form: 0 -> "0", 0.7 -> "0.7"."""
    return str(int(value)) if float(value).is_integer() else str(value)


class _PermitMixin:
    """Bounds concurrent in-flight requests per provider handle."""

    def _init_permits(self, permits: int) -> None:
        self._permits = threading.BoundedSemaphore(max(1, permits))


class OpenAiHttpProvider(_PermitMixin):
    """Chat-completions over HTTP with bearer auth and bounded retries.

    Retries (exponential backoff, ``max_retries`` attempts total) apply only
    to 429 and 5xx responses; the reported latency covers the successful
    attempt alone.
    """

    def __init__(self, config: ProviderConfig):
        self.config = config
        self._init_permits(config.permits)

    def complete(self, request: LlmRequest) -> LlmResponse:
        timeout_s = self.config.timeout_ms / 1000.0
        payload = {
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [{"role": role, "content": text} for role, text in request.messages],
        }
        headers = {"Authorization": f"Bearer {self.config.auth_token.reveal()}"}
        last_status = None
        with self._permits:
            for attempt in range(self.config.max_retries):
                started = time.perf_counter()
                try:
                    response = requests.post(self.config.endpoint_url, json=payload,
                                             headers=headers, timeout=timeout_s)
                except requests.Timeout as exc:
                    raise ProviderTimeoutError(
                        f"{self.config.name} timed out after {self.config.timeout_ms} ms") from exc
                except requests.RequestException as exc:
                    raise ProviderTimeoutError(f"{self.config.name} unreachable: {exc}") from exc
                latency_ms = int(round((time.perf_counter() - started) * 1000))
                if response.status_code in RETRYABLE_STATUS:
                    last_status = response.status_code
                    if attempt + 1 < self.config.max_retries:
                        time.sleep(min(2 ** attempt * 0.25, 4.0))
                        continue
                    break
                if response.status_code >= 400:
                    raise HttpError(response.status_code, response.text)
                data = response.json()
                text = data["choices"][0]["message"]["content"]
                return LlmResponse(text=text, latency_ms=latency_ms,
                                   provider_meta={"status": response.status_code})
        if last_status == 429:
            raise RateLimitedError(last_status, "rate limited after retries")
        raise HttpError(last_status or 0, "retries exhausted")


class MockProvider(_PermitMixin):
    """Fixed-response provider for tests and the demo chat service."""

    def __init__(self, text: str, delay_ms: int = 0, name: str = "mock",
                 permits: int = DEFAULT_PERMITS):
        self.name = name
        self.text = text
        self.delay_ms = delay_ms
        self._init_permits(permits)

    def complete(self, request: LlmRequest) -> LlmResponse:
        with self._permits:
            started = time.perf_counter()
            if self.delay_ms:
                time.sleep(self.delay_ms / 1000.0)
            latency_ms = int(round((time.perf_counter() - started) * 1000))
        return LlmResponse(text=self.text, latency_ms=latency_ms,
                           provider_meta={"mock": self.name})


class ReplayProvider(_PermitMixin):
    """Deterministic lookups into a directory of pre-recorded responses.

    Layout: ``<model>/<temperature>/<sha256(prompt)>.json`` holding
    ``{"text": ..., "latency_ms": ...}``. Lookups are exact-match on
    (model_id, temperature, prompt digest); no network is ever touched.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"replay store {self.root} does not exist")
        self._init_permits(DEFAULT_PERMITS)

    def fixture_path(self, request: LlmRequest) -> Path:
        return (self.root / request.model_id / format_temperature(request.temperature)
                / f"{request.prompt_digest}.json")

    def complete(self, request: LlmRequest) -> LlmResponse:
        path = self.fixture_path(request)
        if not path.is_file():
            raise MissingFixtureError(
                f"no fixture for model={request.model_id} "
                f"t={format_temperature(request.temperature)} digest={request.prompt_digest}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return LlmResponse(text=data["text"], latency_ms=int(data["latency_ms"]),
                           provider_meta={"fixture": str(path.relative_to(self.root))})

    def store(self, request: LlmRequest, text: str, latency_ms: int) -> Path:
        path = self.fixture_path(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"text": text, "latency_ms": latency_ms},
                                   ensure_ascii=False, indent=1),
                        encoding="utf-8")
        return path


def load_replay_store(path: str | Path) -> ReplayProvider:
    return ReplayProvider(Path(path))


def complete(provider, request: LlmRequest) -> LlmResponse:
    """Uniform entry point over any provider object exposing ``complete``."""
    return provider.complete(request)
