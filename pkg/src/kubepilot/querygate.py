"""Semantic and policy-aware entry point for raw user queries.

One LLM classification call plus deterministic policy checks produce a
StructuredQuery. The policy gate runs after classification and can only
downgrade an accepted query to rejected, never the reverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import prompts
from .audit import authorize
from .cluster.model import VerbCategory
from .directives import DirectiveError, extract_block
from .errors import LlmError, LlmFailure
from .llm import LlmGateway, simple_request
from .roles import UserRole

REJECT_PERMISSION = "permission"
REJECT_UNSUPPORTED = "unsupported"

# static pre-filter bounds (no LLM call spent on obvious junk)
MIN_TOKENS = 2
MAX_NONPRINTABLE_RATIO = 0.30


@dataclass
class QueryScope:
    namespaces: list[str] | str = "ALL"  # "ALL" or explicit list
    resource_kinds: list[str] = field(default_factory=list)
    name_selectors: list[str] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "namespaces": self.namespaces,
            "resource_kinds": list(self.resource_kinds),
            "name_selectors": list(self.name_selectors),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "QueryScope":
        return cls(
            namespaces=payload.get("namespaces", "ALL"),
            resource_kinds=list(payload.get("resource_kinds", [])),
            name_selectors=list(payload.get("name_selectors", [])),
        )


@dataclass
class StructuredQuery:
    raw_text: str
    role_name: str
    status: str = "accepted"  # accepted | rejected | needs_clarification
    intent_category: VerbCategory | None = None
    composite: bool = False
    scope: QueryScope = field(default_factory=QueryScope)
    hints: dict[str, str] = field(default_factory=dict)
    rejection_reason: str | None = None
    clarification_prompt: str | None = None

    def __post_init__(self) -> None:
        if self.status == "rejected" and not self.rejection_reason:
            raise ValueError("rejected query requires a rejection_reason")
        if self.status == "needs_clarification" and not self.clarification_prompt:
            raise ValueError("needs_clarification requires a clarification_prompt")
        if self.status == "accepted" and self.intent_category is None:
            raise ValueError("accepted query requires an intent_category")

    def to_payload(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "role_name": self.role_name,
            "status": self.status,
            "intent_category": self.intent_category.value if self.intent_category else None,
            "composite": self.composite,
            "scope": self.scope.to_payload(),
            "hints": dict(self.hints),
            "rejection_reason": self.rejection_reason,
            "clarification_prompt": self.clarification_prompt,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "StructuredQuery":
        category = payload.get("intent_category")
        return cls(
            raw_text=payload["raw_text"],
            role_name=payload["role_name"],
            status=payload["status"],
            intent_category=VerbCategory(category) if category else None,
            composite=bool(payload.get("composite", False)),
            scope=QueryScope.from_payload(payload.get("scope", {})),
            hints=dict(payload.get("hints", {})),
            rejection_reason=payload.get("rejection_reason"),
            clarification_prompt=payload.get("clarification_prompt"),
        )


def _prefilter_reject(raw: str) -> str | None:
    """Reason string when the input is junk; None when it deserves a look."""
    stripped = raw.strip()
    if len(stripped.split()) < MIN_TOKENS:
        return "too short to be an actionable request"
    printable = sum(1 for ch in stripped if ch.isprintable() or ch.isspace())
    if len(stripped) and 1 - printable / len(stripped) > MAX_NONPRINTABLE_RATIO:
        return "input is mostly non-printable"
    return None


class QueryGateway:
    def __init__(self, llm: LlmGateway):
        self.llm = llm

    def validate_query(self, raw: str, role: UserRole) -> StructuredQuery:
        raw = raw.strip()
        if not raw:
            raise ValueError("query must be non-empty after trimming")

        prefilter_reason = _prefilter_reject(raw)
        if prefilter_reason is not None:
            return StructuredQuery(
                raw_text=raw,
                role_name=role.name,
                status="rejected",
                rejection_reason=REJECT_UNSUPPORTED,
                hints={"detail": prefilter_reason},
            )

        prompt = prompts.classify_query(
            raw, role.name, sorted(c.value for c in role.allowed_categories)
        )
        try:
            response = self.llm.complete(simple_request(prompt, purpose="validate"))
            directive = extract_block(response.content)
        except (LlmError, DirectiveError) as exc:
            raise LlmFailure(f"query classification failed: {exc}") from exc

        if not directive.get("supported", False):
            return StructuredQuery(
                raw_text=raw,
                role_name=role.name,
                status="rejected",
                rejection_reason=REJECT_UNSUPPORTED,
                hints={"detail": str(directive.get("clarification") or "out of domain")},
            )
        if directive.get("ambiguous", False):
            return StructuredQuery(
                raw_text=raw,
                role_name=role.name,
                status="needs_clarification",
                clarification_prompt=str(
                    directive.get("clarification") or "Please restate the request with more detail."
                ),
            )

        try:
            category = VerbCategory.parse(str(directive.get("category", "")))
        except ValueError as exc:
            raise LlmFailure(f"classifier returned an unknown category: {exc}") from exc

        namespaces = directive.get("namespaces", "ALL")
        if namespaces != "ALL" and not isinstance(namespaces, list):
            namespaces = [str(namespaces)]
        query = StructuredQuery(
            raw_text=raw,
            role_name=role.name,
            status="accepted",
            intent_category=category,
            composite=bool(directive.get("composite", False)),
            scope=QueryScope(
                namespaces=namespaces,
                resource_kinds=[str(k) for k in directive.get("resource_kinds", [])],
                name_selectors=[str(n) for n in directive.get("name_selectors", [])],
            ),
            hints={str(k): str(v) for k, v in (directive.get("hints") or {}).items()},
        )

        # deterministic policy gate: may only downgrade accepted -> rejected
        if not authorize(role, category):
            return StructuredQuery(
                raw_text=raw,
                role_name=role.name,
                status="rejected",
                rejection_reason=REJECT_PERMISSION,
                hints={
                    "detail": f"role {role.name!r} does not hold the "
                    f"{category.value} category"
                },
            )
        return query
