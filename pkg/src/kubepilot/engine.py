"""Finite-state workflow engine driving queries through agents.

One turn: validate the query, then loop supervisor decisions (one LLM
directive per iteration) through dispatch until the state reaches
completed, failed, or awaiting_human. Every step persists exactly one
checkpoint whose seq equals the step counter, so any interrupt or crash
can resume from the latest checkpoint with identical downstream behavior.

Human input flows through one mechanism: an interrupt is installed, and
either a synchronous input source answers it immediately (the
"uninterrupted" path) or the turn pauses until resume() delivers the
answer. Both paths apply the answer through the same step sequence, which
is what makes interrupt-then-resume equivalent to an uninterrupted run.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable

from . import prompts
from .audit import AuditLog
from .checkpoints import CheckpointStore, restore_state
from .codegen import CodegenPipeline
from .directives import DirectiveError, extract_block
from .errors import (
    AgentFault,
    CheckpointMissing,
    DirectiveUnparseable,
    EngineFault,
    InvalidSelection,
    KubepilotError,
    LlmFailure,
    NoPendingInterrupt,
    NotFound,
    SchemaViolation,
    SessionBusy,
    UnknownAgent,
)
from .llm import LlmGateway, simple_request
from .querygate import QueryGateway
from .recordlog import canonical_json
from .registry import AgentRegistry
from .roles import RoleTable
from .state import DEFAULT_RETRY_CAP, InterruptRequest, RoutingDecision, WorkflowState
from .tooling import DispatchContext, ToolResult

logger = logging.getLogger(__name__)

DEFAULT_LOOP_CAP = 25
DIRECTIVE_RETRIES = 2
TRANSCRIPT_VALUE_CAP = 4000

AFFIRMATIVE = frozenset({"yes", "y", "approve", "approved", "ok", "proceed", "true"})


def is_affirmative(text: str) -> bool:
    return text.strip().lower() in AFFIRMATIVE


@dataclass
class WorkflowOutcome:
    kind: str  # completed | interrupt | failed
    session_id: str
    text: str = ""
    interrupt: InterruptRequest | None = None
    rejection_reason: str | None = None


HumanInputSource = Callable[[InterruptRequest, WorkflowState], "str | None"]


class WorkflowEngine:
    def __init__(
        self,
        llm: LlmGateway,
        query_gateway: QueryGateway,
        registry: AgentRegistry,
        checkpoints: CheckpointStore,
        roles: RoleTable,
        codegen: CodegenPipeline,
        audit: AuditLog | None = None,
        retry_cap: int = DEFAULT_RETRY_CAP,
        loop_cap: int = DEFAULT_LOOP_CAP,
        human_input_source: HumanInputSource | None = None,
    ):
        self.llm = llm
        self.query_gateway = query_gateway
        self.registry = registry
        self.checkpoints = checkpoints
        self.roles = roles
        self.codegen = codegen
        self.audit = audit
        self.retry_cap = retry_cap
        self.loop_cap = loop_cap
        self.human_input_source = human_input_source
        self._sessions: dict[str, WorkflowState] = {}
        self._leases: dict[str, threading.Lock] = {}
        self._leases_guard = threading.Lock()

    # -- session plumbing -------------------------------------------------------

    def _lease(self, session_id: str) -> threading.Lock:
        with self._leases_guard:
            return self._leases.setdefault(session_id, threading.Lock())

    def _load_or_create(self, session_id: str) -> WorkflowState:
        state = self._sessions.get(session_id)
        if state is not None:
            return state
        try:
            checkpoint = self.checkpoints.load_latest(session_id)
            state = restore_state(checkpoint)
        except NotFound:
            state = WorkflowState(session_id=session_id)
        self._sessions[session_id] = state
        return state

    def get_state(self, session_id: str) -> WorkflowState | None:
        state = self._sessions.get(session_id)
        if state is not None:
            return state
        try:
            return restore_state(self.checkpoints.load_latest(session_id))
        except NotFound:
            return None

    def has_pending_interrupt(self, session_id: str) -> bool:
        state = self.get_state(session_id)
        return state is not None and state.pending_interrupt is not None

    def _record_step(self, state: WorkflowState, node_name: str) -> None:
        state.step_counter += 1
        cause = {
            "running": "node_boundary",
            "awaiting_human": "interrupt",
            "completed": "completion",
            "failed": "failure",
        }[state.status]
        self.checkpoints.save_checkpoint(
            state.session_id, state.step_counter, node_name, cause, state
        )

    def _audit(self, state: WorkflowState, actor: str, action: str, target: str = "",
               payload=None, outcome: str = "") -> None:
        if self.audit is not None:
            self.audit.append(
                session_id=state.session_id,
                actor=actor,
                action=action,
                target=target,
                payload=payload,
                outcome=outcome,
            )

    # -- public operations ---------------------------------------------------------

    def run_turn(self, session_id: str, user_text: str, role_name: str) -> WorkflowOutcome:
        role = self.roles.get(role_name)
        lease = self._lease(session_id)
        if not lease.acquire(blocking=False):
            raise SessionBusy(f"session {session_id} is executing another turn")
        try:
            state = self._load_or_create(session_id)
            if state.pending_interrupt is not None:
                raise SessionBusy(
                    f"session {session_id} has an unanswered {state.pending_interrupt.kind} interrupt"
                )
            state.turn_index += 1
            state.turn_started_step = state.step_counter + 1
            state.turn_transcript_start = len(state.transcript)
            state.status = "running"
            state.final_text = ""
            state.record("user", user_text)
            self._audit(state, "user", "query_received", target=role_name,
                        payload={"text": user_text}, outcome="received")

            try:
                query = self.query_gateway.validate_query(user_text, role)
            except (LlmFailure, ValueError) as exc:
                return self._fail(state, f"query validation failed: {exc}", raise_fault=True)
            state.query = query

            if query.status == "rejected":
                detail = query.hints.get("detail", "")
                message = self._rejection_message(query.rejection_reason or "", detail)
                state.record("supervisor", message)
                state.status = "completed"
                state.final_text = message
                self._audit(state, "supervisor", "query_rejected",
                            target=query.rejection_reason or "", outcome="rejected")
                self._record_step(state, "validate")
                return WorkflowOutcome(
                    kind="completed",
                    session_id=session_id,
                    text=message,
                    rejection_reason=query.rejection_reason,
                )
            if query.status == "needs_clarification":
                state.record("supervisor", query.clarification_prompt or "")
                self._raise_interrupt(
                    state, "clarification", query.clarification_prompt or "",
                    {"kind": "query_clarification"},
                )
                self._record_step(state, "validate")
            else:
                self._record_step(state, "validate")
            return self._drive(state)
        finally:
            lease.release()

    def resume(self, session_id: str, human_input: str) -> WorkflowOutcome:
        lease = self._lease(session_id)
        if not lease.acquire(blocking=False):
            raise SessionBusy(f"session {session_id} is executing another turn")
        try:
            try:
                checkpoint = self.checkpoints.load_latest(session_id)
            except NotFound as exc:
                raise CheckpointMissing(f"no checkpoint for session {session_id}") from exc
            state = restore_state(checkpoint)
            if state.pending_interrupt is None:
                raise NoPendingInterrupt(f"session {session_id} is not awaiting input")
            self._sessions[session_id] = state
            self._apply_human_input(state, human_input)
            return self._drive(state)
        finally:
            lease.release()

    # -- supervisor loop -------------------------------------------------------------

    def _drive(self, state: WorkflowState) -> WorkflowOutcome:
        iterations = 0
        try:
            while True:
                if state.status == "awaiting_human":
                    answer = (
                        self.human_input_source(state.pending_interrupt, state)
                        if self.human_input_source is not None
                        else None
                    )
                    if answer is None:
                        assert state.pending_interrupt is not None
                        return WorkflowOutcome(
                            kind="interrupt",
                            session_id=state.session_id,
                            text=state.pending_interrupt.prompt,
                            interrupt=state.pending_interrupt,
                        )
                    self._apply_human_input(state, answer)
                    continue
                if state.status in ("completed", "failed"):
                    break
                iterations += 1
                if iterations > self.loop_cap:
                    return self._fail(state, "per-turn supervisor loop cap exceeded")
                decision = self.supervisor_route(state)
                self._audit(
                    state, "supervisor", "routing_decision",
                    target=decision.target_agent or decision.action,
                    payload=decision.to_payload(), outcome=decision.action,
                )
                self.dispatch_step(state, decision)
        except (DirectiveUnparseable, UnknownAgent) as exc:
            return self._fail(state, str(exc), raise_fault=True)
        except KubepilotError as exc:
            return self._fail(state, f"unrecoverable engine error: {exc}", raise_fault=True)

        kind = "completed" if state.status == "completed" else "failed"
        return WorkflowOutcome(kind=kind, session_id=state.session_id, text=state.final_text)

    def _fail(self, state: WorkflowState, message: str, raise_fault: bool = False) -> WorkflowOutcome:
        logger.error("session %s failed: %s", state.session_id, message)
        state.pending_interrupt = None
        state.pending_resume = None
        state.status = "failed"
        state.final_text = message
        state.record("supervisor", message)
        self._record_step(state, "fault")
        if raise_fault:
            raise EngineFault(message)
        return WorkflowOutcome(kind="failed", session_id=state.session_id, text=message)

    @staticmethod
    def _rejection_message(reason: str, detail: str) -> str:
        if reason == "permission":
            return f"Request refused: your role does not permit this action ({detail})."
        return f"Request not handled: it is outside what this system supports ({detail})."

    def _turn_log(self, state: WorkflowState) -> list[str]:
        entries = state.transcript[state.turn_transcript_start:]
        return [f"{actor}: {content}" for actor, content in entries]

    def supervisor_route(self, state: WorkflowState) -> RoutingDecision:
        if state.status != "running":
            raise EngineFault("supervisor consulted while not running")
        assert state.query is not None
        feedback: str | None = None
        for _ in range(1 + DIRECTIVE_RETRIES):
            prompt = prompts.supervisor_route(
                state.query.raw_text,
                self.registry.agent_summaries(),
                self._turn_log(state),
                feedback,
            )
            response = self.llm.complete(simple_request(prompt, purpose="route"))
            try:
                directive = extract_block(response.content)
                decision = RoutingDecision(
                    action=str(directive.get("action", "")),
                    target_agent=directive.get("target_agent"),
                    message=directive.get("message"),
                )
            except (DirectiveError, ValueError) as exc:
                feedback = str(exc)
                continue
            if decision.action == "route_agent" and not self.registry.has_agent(
                decision.target_agent or ""
            ):
                raise UnknownAgent(f"directive targets unregistered agent {decision.target_agent!r}")
            return decision
        raise DirectiveUnparseable(f"supervisor directive malformed after retries: {feedback}")

    # -- dispatch ----------------------------------------------------------------------

    def dispatch_step(self, state: WorkflowState, decision: RoutingDecision) -> WorkflowState:
        assert state.query is not None
        if decision.action == "route_agent":
            task = decision.message or state.query.raw_text
            agent_name = decision.target_agent or ""
            state.last_task = {"agent": agent_name, "task": task}
            self._run_agent_task(state, agent_name, task)
            self._record_step(state, f"agent:{agent_name}")
        elif decision.action == "retry_task":
            self._retry_task(state, decision)
        elif decision.action == "reject_result":
            key = self._task_key(state)
            count = state.per_task_retries.get(key, 0)
            if count < self.retry_cap:
                state.per_task_retries[key] = count + 1
            state.record("supervisor", f"result rejected: {decision.message or 'unsatisfactory'}")
            self._record_step(state, "reject-result")
        elif decision.action == "clarify":
            state.record("supervisor", decision.message or "")
            self._raise_interrupt(
                state, "clarification", decision.message or "", {"kind": "supervisor_clarify"}
            )
            self._record_step(state, "clarify")
        elif decision.action == "invoke_codegen":
            task = decision.message or state.query.raw_text
            prompt_text = f"Approve generation of a new tool for: {task}?"
            state.record("supervisor", prompt_text)
            self._raise_interrupt(
                state, "approval", prompt_text, {"kind": "codegen_approval", "task": task}
            )
            self._record_step(state, "codegen-approval")
        elif decision.action == "respond":
            text = decision.message or ""
            state.record("supervisor", text)
            state.final_text = text
            state.status = "completed"
            self._record_step(state, "respond")
        elif decision.action == "finish":
            text = self._synthesize_response(state)
            state.record("supervisor", text)
            state.final_text = text
            state.status = "completed"
            self._record_step(state, "finish")
        return state

    @staticmethod
    def _task_key(state: WorkflowState) -> str:
        if state.last_task:
            return f"{state.last_task['agent']}:{state.last_task['task']}"
        return "turn"

    def _retry_task(self, state: WorkflowState, decision: RoutingDecision) -> None:
        key = self._task_key(state)
        count = state.per_task_retries.get(key, 0)
        if count >= self.retry_cap:
            state.record("supervisor", f"retry budget exhausted for task ({key})")
        elif state.last_task is None:
            state.record("supervisor", "nothing to retry yet")
        else:
            state.per_task_retries[key] = count + 1
            task = decision.message or state.last_task["task"]
            state.record("supervisor", f"retrying task via {state.last_task['agent']}: {task}")
            self._run_agent_task(state, state.last_task["agent"], task)
        self._record_step(state, "retry-task")

    def _run_agent_task(self, state: WorkflowState, agent_name: str, task: str) -> None:
        """Select, bind, and dispatch; agent faults are recorded, not raised."""
        assert state.query is not None
        try:
            tool = self.registry.match_tool(agent_name, task)
            if tool is None:
                state.record(
                    f"agent:{agent_name}",
                    f"no registered tool matches this task: {task}",
                )
                return
            arguments = (
                self.registry.extract_arguments(tool, task) if tool.input_schema else {}
            )
            context = DispatchContext(
                session_id=state.session_id,
                step=state.step_counter + 1,
                role=self.roles.get(state.query.role_name),
            )
            try:
                result = self.registry.dispatch(tool, arguments, context)
            except SchemaViolation as exc:
                result = ToolResult(
                    status="error", error_message=str(exc), produced_at_step=context.step
                )
            state.append_output(agent_name, result)
            state.record(f"agent:{agent_name}", f"invoked {tool.name}({canonical_json(arguments)})")
            state.record(f"tool:{tool.name}", self._render_result(result))
        except (AgentFault, InvalidSelection, LlmFailure) as exc:
            state.record(f"agent:{agent_name}", f"agent fault: {exc}")

    @staticmethod
    def _render_result(result: ToolResult) -> str:
        rendered = canonical_json(result.envelope())
        if len(rendered) > TRANSCRIPT_VALUE_CAP:
            rendered = rendered[:TRANSCRIPT_VALUE_CAP] + "...(truncated)"
        return rendered

    # -- interrupts and human input -------------------------------------------------------

    def _raise_interrupt(
        self, state: WorkflowState, kind: str, prompt: str, resume_plan: dict
    ) -> None:
        state.pending_interrupt = InterruptRequest(
            kind=kind, prompt=prompt, originating_step=state.step_counter
        )
        state.pending_resume = resume_plan
        state.status = "awaiting_human"
        self._audit(state, "supervisor", "interrupt_raised", target=kind,
                    payload={"prompt": prompt}, outcome="awaiting_human")

    def _apply_human_input(self, state: WorkflowState, text: str) -> None:
        assert state.pending_interrupt is not None
        plan = state.pending_resume or {}
        kind = state.pending_interrupt.kind
        state.pending_interrupt = None
        state.pending_resume = None
        state.status = "running"
        state.record("user", text)
        self._audit(state, "user", "interrupt_resolved", target=kind,
                    payload={"answer": text}, outcome="resolved")
        self._record_step(state, "human-input")

        plan_kind = plan.get("kind")
        if plan_kind == "codegen_approval":
            if is_affirmative(text):
                self._run_codegen(state, str(plan.get("task", "")))
            else:
                state.record("supervisor", "tool generation declined; no new tool created")
                self._record_step(state, "codegen-declined")
        elif plan_kind == "query_clarification":
            self._revalidate_with_clarification(state, text)
        # supervisor_clarify needs no extra action: the answer is on the
        # transcript and the supervisor is consulted next

    def _run_codegen(self, state: WorkflowState, task: str) -> None:
        pipeline = self.codegen.with_stage_listener(
            lambda stage, run: self._record_step(state, f"codegen:{stage}")
        )
        run = pipeline.run_pipeline(
            task=task,
            context_summary=self._context_summary(state),
            approval_hook=None,  # approval already granted through the interrupt
            session_id=state.session_id,
        )
        if run.outcome == "registered" and run.registered_tool is not None:
            state.record(
                "agent:CodeGenerator",
                f"registered tool {run.registered_tool.name} "
                f"(version {run.registered_tool.version}, attempts {run.attempts_used})",
            )
        else:
            state.record(
                "agent:CodeGenerator",
                f"tool generation aborted after {run.attempts_used} attempt(s): {run.abort_cause}",
            )
        self._record_step(state, "codegen-result")

    def _revalidate_with_clarification(self, state: WorkflowState, clarification: str) -> None:
        assert state.query is not None
        combined = f"{state.query.raw_text} {clarification}".strip()
        role = self.roles.get(state.query.role_name)
        try:
            query = self.query_gateway.validate_query(combined, role)
        except (LlmFailure, ValueError) as exc:
            self._fail(state, f"clarified query validation failed: {exc}")
            return
        state.query = query
        if query.status == "rejected":
            message = self._rejection_message(
                query.rejection_reason or "", query.hints.get("detail", "")
            )
            state.record("supervisor", message)
            state.status = "completed"
            state.final_text = message
            self._audit(state, "supervisor", "query_rejected",
                        target=query.rejection_reason or "", outcome="rejected")
        elif query.status == "needs_clarification":
            state.record("supervisor", query.clarification_prompt or "")
            self._raise_interrupt(
                state, "clarification", query.clarification_prompt or "",
                {"kind": "query_clarification"},
            )
        self._record_step(state, "validate")

    def _context_summary(self, state: WorkflowState) -> str:
        outputs = state.turn_outputs()
        if not outputs:
            return "no agent outputs yet this turn"
        parts = []
        for agent_name in sorted(outputs):
            latest = outputs[agent_name][-1]
            parts.append(f"{agent_name} latest result: {self._render_result(latest)[:300]}")
        return " | ".join(parts)

    # -- final response ----------------------------------------------------------------------

    def _synthesize_response(self, state: WorkflowState) -> str:
        assert state.query is not None
        prompt = prompts.summarize(state.query.raw_text, self._turn_log(state))
        try:
            response = self.llm.complete(simple_request(prompt, purpose="summarize"))
            text = response.content.strip()
            if text:
                return text
        except KubepilotError as exc:
            logger.info("summarize call unavailable (%s); using deterministic template", exc)
        return self._fallback_response(state)

    def _fallback_response(self, state: WorkflowState) -> str:
        assert state.query is not None
        lines = [f"Results for: {state.query.raw_text}"]
        outputs = state.turn_outputs()
        if not outputs:
            lines.append("No agent produced output for this request.")
        for agent_name in sorted(outputs):
            lines.append(f"[{agent_name}]")
            for result in outputs[agent_name]:
                lines.append(self._render_result(result))
        return "\n".join(lines)
