"""Shared types for agents, tools, and tool results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .cluster.model import VerbCategory
from .errors import SchemaViolation
from .roles import UserRole

AGENT_NAMES = (
    "Logs",
    "Configs",
    "RBAC",
    "Metrics",
    "Security",
    "Lifecycle",
    "Execution",
    "Deletion",
    "AdvancedOps",
    "CodeGenerator",
)

FIELD_TYPES = ("text", "integer", "boolean", "list-of-text")


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str
    required: bool = True

    def __post_init__(self) -> None:
        if self.type not in FIELD_TYPES:
            raise ValueError(f"unknown field type {self.type!r}")

    def to_payload(self) -> dict[str, Any]:
        return {"name": self.name, "type": self.type, "required": self.required}

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "FieldSpec":
        return cls(
            name=str(payload["name"]),
            type=str(payload["type"]),
            required=bool(payload.get("required", True)),
        )


@dataclass
class ToolSpec:
    name: str
    description: str
    input_schema: list[FieldSpec]
    owner_agent: str
    category: VerbCategory
    origin: str = "builtin"  # builtin | generated
    version: int = 1
    artifact: str = ""  # handler key (builtin) or script path (generated)

    def validate_arguments(self, arguments: dict[str, Any]) -> dict[str, Any]:
        """Check required fields and value types; returns the checked map."""
        known = {f.name: f for f in self.input_schema}
        for name in arguments:
            if name not in known:
                raise SchemaViolation(f"tool {self.name}: unexpected argument {name!r}")
        for spec in self.input_schema:
            if spec.name not in arguments:
                if spec.required:
                    raise SchemaViolation(
                        f"tool {self.name}: missing required argument {spec.name!r}"
                    )
                continue
            value = arguments[spec.name]
            if spec.type == "text" and not isinstance(value, str):
                raise SchemaViolation(f"tool {self.name}: {spec.name} must be text")
            if spec.type == "integer" and (isinstance(value, bool) or not isinstance(value, int)):
                raise SchemaViolation(f"tool {self.name}: {spec.name} must be an integer")
            if spec.type == "boolean" and not isinstance(value, bool):
                raise SchemaViolation(f"tool {self.name}: {spec.name} must be a boolean")
            if spec.type == "list-of-text" and (
                not isinstance(value, list) or not all(isinstance(v, str) for v in value)
            ):
                raise SchemaViolation(f"tool {self.name}: {spec.name} must be a list of text")
        return arguments

    def schema_payload(self) -> list[dict[str, Any]]:
        return [f.to_payload() for f in self.input_schema]


@dataclass
class ToolResult:
    status: str  # success | error
    data: Any = None
    error_message: str | None = None
    produced_at_step: int = 0

    def __post_init__(self) -> None:
        if self.status == "error" and not self.error_message:
            raise ValueError("error result requires error_message")

    def envelope(self) -> dict[str, Any]:
        return {"status": self.status, "data": self.data}

    def to_payload(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "data": self.data,
            "error_message": self.error_message,
            "produced_at_step": self.produced_at_step,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "ToolResult":
        return cls(
            status=payload["status"],
            data=payload.get("data"),
            error_message=payload.get("error_message"),
            produced_at_step=int(payload.get("produced_at_step", 0)),
        )


@dataclass
class AgentDescriptor:
    name: str
    description: str
    tool_names: list[str] = field(default_factory=list)
    prompt_template: str = ""


@dataclass
class DispatchContext:
    session_id: str = ""
    step: int = 0
    role: UserRole | None = None
