"""Uniform gateway in front of language-model providers.

Adds retry with exponential backoff for transient faults, an optional
response cache keyed on (model, temperature, messages), and audit hooks.
Providers implement one method: ``complete(request) -> str`` and may raise
TransientProviderError / ProviderRateLimit to request a retry.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from typing import Callable, Protocol

from ..errors import MalformedResponse, ProviderUnavailable, RateLimited
from .types import LlmRequest, LlmResponse

logger = logging.getLogger(__name__)


class TransientProviderError(Exception):
    """Provider failed in a way worth retrying (timeouts, 5xx)."""


class ProviderRateLimit(TransientProviderError):
    """Provider signalled quota exhaustion (HTTP 429 and kin)."""


class Provider(Protocol):
    provider_id: str

    def complete(self, request: LlmRequest) -> str: ...


def cache_key(request: LlmRequest) -> str:
    """Stable hash of (model_id, temperature, messages).

    purpose_tag is deliberately excluded so identical prompts share one
    cache slot regardless of why they were issued.
    """
    payload = json.dumps(
        {
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [[m.role, m.content] for m in request.messages],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


class LlmGateway:
    """Front door for all completions issued by the system."""

    def __init__(
        self,
        provider: Provider,
        *,
        cache_enabled: bool = True,
        max_attempts: int = 4,
        backoff_base_ms: int = 250,
        sleep: Callable[[float], None] = time.sleep,
        audit_hook: Callable[[LlmRequest, LlmResponse], None] | None = None,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.provider = provider
        self.cache_enabled = cache_enabled
        self.max_attempts = max_attempts
        self.backoff_base_ms = backoff_base_ms
        self._sleep = sleep
        self._audit_hook = audit_hook
        self._cache: dict[str, str] = {}
        self._cache_lock = threading.Lock()
        self.provider_invocations = 0

    def complete(self, request: LlmRequest) -> LlmResponse:
        request.validate()
        key = cache_key(request)
        if self.cache_enabled:
            with self._cache_lock:
                cached = self._cache.get(key)
            if cached is not None:
                response = LlmResponse(
                    content=cached,
                    provider_id=self.provider.provider_id,
                    from_cache=True,
                    latency_ms=0,
                )
                self._audit(request, response)
                return response

        content = self._complete_with_retries(request)
        if not content or not content.strip():
            raise MalformedResponse("provider returned empty content")

        if self.cache_enabled:
            with self._cache_lock:
                self._cache.setdefault(key, content)
        response = LlmResponse(
            content=content,
            provider_id=self.provider.provider_id,
            from_cache=False,
            latency_ms=self._last_latency_ms,
        )
        self._audit(request, response)
        return response

    def _complete_with_retries(self, request: LlmRequest) -> str:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            started = time.monotonic()
            try:
                self.provider_invocations += 1
                content = self.provider.complete(request)
                # zero latency is reserved for cache hits
                self._last_latency_ms = max(1, int((time.monotonic() - started) * 1000))
                return content
            except TransientProviderError as exc:
                last_error = exc
                if attempt + 1 < self.max_attempts:
                    delay_ms = self.backoff_base_ms * (2**attempt)
                    logger.warning(
                        "provider attempt %d/%d failed (%s); backing off %d ms",
                        attempt + 1,
                        self.max_attempts,
                        exc,
                        delay_ms,
                    )
                    self._sleep(delay_ms / 1000.0)
        if isinstance(last_error, ProviderRateLimit):
            raise RateLimited(str(last_error))
        raise ProviderUnavailable(str(last_error))

    _last_latency_ms = 0

    def _audit(self, request: LlmRequest, response: LlmResponse) -> None:
        if self._audit_hook is not None:
            self._audit_hook(request, response)
