"""Request/response types for the language-model gateway."""

from __future__ import annotations

from dataclasses import dataclass

VALID_ROLES = ("system", "user", "assistant", "tool")
VALID_PURPOSES = ("route", "validate", "codegen", "metadata", "summarize")


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass
class LlmRequest:
    """One prompt issued through the gateway.

    temperature is clamped to [0, 1] by validation, purpose_tag labels what
    the caller is doing with the completion (routing, codegen, ...) for
    auditing; it does not affect caching.
    """

    messages: list[Message]
    model_id: str = "default"
    temperature: float = 0.0
    max_tokens: int = 2048
    purpose_tag: str = "route"

    def validate(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message role must be system or user")
        for msg in self.messages:
            if msg.role not in VALID_ROLES:
                raise ValueError(f"unknown message role {msg.role!r}")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be within [0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.purpose_tag not in VALID_PURPOSES:
            raise ValueError(f"unknown purpose_tag {self.purpose_tag!r}")

    def rendered(self) -> str:
        """Flat text view of the conversation, used for matching and hashing."""
        return "\n".join(f"[{m.role}] {m.content}" for m in self.messages)


@dataclass
class LlmResponse:
    content: str
    provider_id: str
    from_cache: bool = False
    latency_ms: int = 0


def simple_request(
    prompt: str,
    *,
    purpose: str,
    system: str | None = None,
    model_id: str = "default",
    temperature: float = 0.0,
) -> LlmRequest:
    """Build a one-shot request with an optional system preamble."""
    messages: list[Message] = []
    if system:
        messages.append(Message("system", system))
    messages.append(Message("user", prompt))
    return LlmRequest(
        messages=messages,
        model_id=model_id,
        temperature=temperature,
        purpose_tag=purpose,
    )
