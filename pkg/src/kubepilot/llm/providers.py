"""HTTP provider speaking the OpenAI-compatible chat-completions contract."""

from __future__ import annotations

import httpx

from .gateway import ProviderRateLimit, TransientProviderError
from .types import LlmRequest


class HttpChatProvider:
    """Posts completions to any endpoint implementing /chat/completions.

    Configured from the environment by kubepilot.config; self-hosted and
    public backends look identical behind this wire contract.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model_id: str = "",
        timeout_s: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model_id = model_id
        self.provider_id = f"http:{self.base_url}"
        self._client = client or httpx.Client(timeout=timeout_s)

    def complete(self, request: LlmRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model_id or request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers
            )
        except httpx.HTTPError as exc:
            raise TransientProviderError(f"transport failure: {exc}") from exc

        if response.status_code == 429:
            raise ProviderRateLimit("provider returned 429")
        if response.status_code >= 500:
            raise TransientProviderError(f"provider returned {response.status_code}")
        if response.status_code != 200:
            raise TransientProviderError(
                f"provider returned {response.status_code}: {response.text[:200]}"
            )
        try:
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransientProviderError(f"unexpected response shape: {exc}") from exc

    def ping(self) -> bool:
        """Cheap reachability probe used by the health endpoint."""
        try:
            self._client.get(self.base_url, timeout=5.0)
            return True
        except httpx.HTTPError:
            return False
