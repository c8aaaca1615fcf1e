"""Per-session orchestration state and its canonical serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .errors import CorruptBlob
from .querygate import StructuredQuery
from .tooling import ToolResult

STATUSES = ("running", "awaiting_human", "completed", "failed")
INTERRUPT_KINDS = ("clarification", "approval")

DEFAULT_RETRY_CAP = 3


@dataclass
class InterruptRequest:
    kind: str
    prompt: str
    originating_step: int

    def __post_init__(self) -> None:
        if self.kind not in INTERRUPT_KINDS:
            raise ValueError(f"unknown interrupt kind {self.kind!r}")
        if not self.prompt:
            raise ValueError("interrupt prompt must be non-empty")

    def to_payload(self) -> dict[str, Any]:
        return {"kind": self.kind, "prompt": self.prompt, "originating_step": self.originating_step}

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "InterruptRequest":
        return cls(
            kind=payload["kind"],
            prompt=payload["prompt"],
            originating_step=int(payload["originating_step"]),
        )


@dataclass
class RoutingDecision:
    action: str
    target_agent: str | None = None
    message: str | None = None

    ACTIONS = (
        "route_agent",
        "respond",
        "clarify",
        "reject_result",
        "retry_task",
        "invoke_codegen",
        "finish",
    )

    def __post_init__(self) -> None:
        if self.action not in self.ACTIONS:
            raise ValueError(f"unknown routing action {self.action!r}")
        if self.action == "route_agent" and not self.target_agent:
            raise ValueError("route_agent requires a target_agent")
        if self.action == "clarify" and not self.message:
            raise ValueError("clarify requires a message")

    def to_payload(self) -> dict[str, Any]:
        return {"action": self.action, "target_agent": self.target_agent, "message": self.message}


@dataclass
class WorkflowState:
    session_id: str
    turn_index: int = 0
    step_counter: int = 0
    query: StructuredQuery | None = None
    transcript: list[tuple[str, str]] = field(default_factory=list)
    agent_outputs: dict[str, list[ToolResult]] = field(default_factory=dict)
    pending_interrupt: InterruptRequest | None = None
    # what to do with the human's answer when it arrives; internal plumbing
    pending_resume: dict[str, Any] | None = None
    per_task_retries: dict[str, int] = field(default_factory=dict)
    status: str = "running"
    final_text: str = ""
    turn_started_step: int = 0
    turn_transcript_start: int = 0
    # last agent task, kept so retry_task can re-dispatch it
    last_task: dict[str, Any] | None = None

    def check_invariants(self, retry_cap: int = DEFAULT_RETRY_CAP) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == "awaiting_human") != (self.pending_interrupt is not None):
            raise ValueError("awaiting_human and pending_interrupt must agree")
        if self.pending_interrupt is not None:
            if self.pending_interrupt.originating_step > self.step_counter:
                raise ValueError("interrupt originating_step exceeds step_counter")
        for task, count in self.per_task_retries.items():
            if count > retry_cap:
                raise ValueError(f"retry count for {task!r} exceeds cap {retry_cap}")

    def record(self, actor: str, content: str) -> None:
        self.transcript.append((actor, content))

    def append_output(self, agent_name: str, result: ToolResult) -> None:
        self.agent_outputs.setdefault(agent_name, []).append(result)

    def turn_outputs(self) -> dict[str, list[ToolResult]]:
        """Outputs produced during the current turn only (stale-context guard)."""
        current: dict[str, list[ToolResult]] = {}
        for agent_name, results in self.agent_outputs.items():
            fresh = [r for r in results if r.produced_at_step >= self.turn_started_step]
            if fresh:
                current[agent_name] = fresh
        return current

    def to_payload(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "turn_index": self.turn_index,
            "step_counter": self.step_counter,
            "query": self.query.to_payload() if self.query else None,
            "transcript": [[actor, content] for actor, content in self.transcript],
            "agent_outputs": {
                agent: [r.to_payload() for r in results]
                for agent, results in self.agent_outputs.items()
            },
            "pending_interrupt": self.pending_interrupt.to_payload()
            if self.pending_interrupt
            else None,
            "pending_resume": self.pending_resume,
            "per_task_retries": dict(self.per_task_retries),
            "status": self.status,
            "final_text": self.final_text,
            "turn_started_step": self.turn_started_step,
            "turn_transcript_start": self.turn_transcript_start,
            "last_task": self.last_task,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "WorkflowState":
        try:
            state = cls(
                session_id=payload["session_id"],
                turn_index=int(payload["turn_index"]),
                step_counter=int(payload["step_counter"]),
                query=StructuredQuery.from_payload(payload["query"])
                if payload.get("query")
                else None,
                transcript=[(actor, content) for actor, content in payload["transcript"]],
                agent_outputs={
                    agent: [ToolResult.from_payload(r) for r in results]
                    for agent, results in payload.get("agent_outputs", {}).items()
                },
                pending_interrupt=InterruptRequest.from_payload(payload["pending_interrupt"])
                if payload.get("pending_interrupt")
                else None,
                pending_resume=payload.get("pending_resume"),
                per_task_retries={
                    k: int(v) for k, v in payload.get("per_task_retries", {}).items()
                },
                status=payload["status"],
                final_text=payload.get("final_text", ""),
                turn_started_step=int(payload.get("turn_started_step", 0)),
                turn_transcript_start=int(payload.get("turn_transcript_start", 0)),
                last_task=payload.get("last_task"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptBlob(f"workflow state payload invalid: {exc}") from exc
        state.check_invariants()
        return state
